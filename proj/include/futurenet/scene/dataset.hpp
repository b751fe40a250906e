// Copyright 2026 The FutureNet-LOF Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "futurenet/scene/json_io.hpp"

namespace futurenet {

struct SceneRecord {
  Scene scene;
  std::optional<LofLabels> labels;
  std::string path;
};

/// Scene files of a dataset directory: manifest order when a manifest.json
/// is present, otherwise every *.json in the directory sorted by name.
inline std::vector<std::string> list_scene_files(const std::string & dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("dataset directory '" + dir + "' does not exist");
  const fs::path manifest = fs::path(dir) / "manifest.json";
  std::vector<std::string> files;
  if (fs::exists(manifest)) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text_file(manifest.string()));
    } catch (const nlohmann::json::exception & e) {
      throw DataError("cannot parse manifest '" + manifest.string() + "': " + e.what());
    }
    for (const auto & entry : j.at("scenes")) {
      files.push_back((fs::path(dir) / entry.at("file").get<std::string>()).string());
    }
    return files;
  }
  for (const auto & entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const fs::path & p = entry.path();
    if (p.extension() != ".json" || p.filename() == "manifest.json") continue;
    files.push_back(p.string());
  }
  std::sort(files.begin(), files.end());
  return files;
}

inline std::vector<SceneRecord> load_scene_files(const std::vector<std::string> & paths) {
  std::vector<SceneRecord> out;
  out.reserve(paths.size());
  for (const auto & path : paths) {
    SceneRecord rec;
    rec.path = path;
    rec.scene = load_scene(path, &rec.labels);
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::vector<SceneRecord> load_dataset(const std::string & dir) {
  return load_scene_files(list_scene_files(dir));
}

}  // namespace futurenet
