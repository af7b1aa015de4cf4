/*
 * Copyright (c) 2026 The inucleus Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "inucleus/audio.hpp"
#include "inucleus/errors.hpp"

namespace inucleus {

namespace {

// RFC 4180 subset: quoted fields with doubled quotes, no embedded newlines.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else if (c != '\r') {
      out.back() += c;
    }
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

template <typename I>
I parse_int(const std::string& s, const std::string& what, std::size_t line) {
  I v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ParseError("manifest line " + std::to_string(line) + ": bad " + what + " '" + s + "'");
  }
  return v;
}

}  // namespace

Manifest parse_manifest(const std::string& csv, const ManifestColumns& columns) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("manifest is empty");
  const std::vector<std::string> header = split_csv_line(line);
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError("manifest has no '" + name + "' column");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_file = column(columns.file_name), c_fold = column(columns.fold),
                    c_id = column(columns.class_id), c_name = column(columns.class_name);

  Manifest m;
  std::map<std::size_t, std::string> names;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != header.size()) {
      throw ParseError("manifest line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
    }
    ManifestRow r;
    r.file_name = f[c_file];
    r.fold = parse_int<int>(f[c_fold], "fold", line_no);
    r.class_id = parse_int<std::size_t>(f[c_id], "class id", line_no);
    r.class_name = f[c_name];
    const auto [it, inserted] = names.emplace(r.class_id, r.class_name);
    if (!inserted && it->second != r.class_name) {
      throw ParseError("manifest line " + std::to_string(line_no) + ": class id " +
                       std::to_string(r.class_id) + " is named both '" + it->second + "' and '" +
                       r.class_name + "'");
    }
    m.rows.push_back(std::move(r));
  }
  if (m.rows.empty()) throw ParseError("manifest has no rows");
  std::map<std::string, std::size_t> ids;
  for (const auto& [id, name] : names) {
    if (id != m.class_names.size()) {
      throw ParseError("manifest class ids are not dense: missing id " +
                       std::to_string(m.class_names.size()));
    }
    if (!ids.emplace(name, id).second) {
      throw ParseError("manifest class name '" + name + "' maps to several ids");
    }
    m.class_names.push_back(name);
  }
  return m;
}

Manifest read_manifest(const std::filesystem::path& path, const ManifestColumns& columns) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), columns);
}

std::string format_manifest(const Manifest& manifest, const ManifestColumns& columns) {
  std::string out = csv_field(columns.file_name) + "," + csv_field(columns.fold) + "," +
                    csv_field(columns.class_id) + "," + csv_field(columns.class_name) + "\n";
  for (const ManifestRow& r : manifest.rows) {
    out += csv_field(r.file_name) + "," + std::to_string(r.fold) + "," +
           std::to_string(r.class_id) + "," + csv_field(r.class_name) + "\n";
  }
  return out;
}

std::pair<std::vector<ManifestRow>, std::vector<ManifestRow>> make_splits(
    const Manifest& manifest, const std::set<int>& test_folds, std::uint64_t seed) {
  std::vector<ManifestRow> train, test;
  for (const ManifestRow& r : manifest.rows) (test_folds.count(r.fold) ? test : train).push_back(r);
  std::mt19937_64 rng(seed);
  std::shuffle(train.begin(), train.end(), rng);
  return {std::move(train), std::move(test)};
}

Manifest subsample(const Manifest& manifest, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("subsample fraction must be in (0, 1]");
  const auto k = static_cast<std::size_t>(std::floor(manifest.rows.size() * fraction));
  if (k == 0) throw ConfigError("subsample fraction selects no rows");
  std::vector<std::size_t> idx(manifest.rows.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  Manifest out;
  out.class_names = manifest.class_names;
  for (std::size_t i : idx) out.rows.push_back(manifest.rows[i]);
  return out;
}

std::filesystem::path locate_clip(const std::filesystem::path& data_dir, const ManifestRow& row) {
  const std::string fold = "fold" + std::to_string(row.fold);
  for (const auto& p : {data_dir / fold / row.file_name, data_dir / "audio" / fold / row.file_name,
                        data_dir / row.file_name}) {
    if (std::filesystem::is_regular_file(p)) return p;
  }
  throw IoError("clip '" + row.file_name + "' not found under '" + data_dir.string() + "'");
}

std::vector<Sample> load_samples(const std::vector<ManifestRow>& rows,
                                 const std::filesystem::path& data_dir, std::size_t target_len) {
  std::vector<Sample> out;
  out.reserve(rows.size());
  for (const ManifestRow& r : rows) {
    const Audio a = read_wav(locate_clip(data_dir, r));
    if (a.samples.empty()) throw ParseError("clip '" + r.file_name + "' is empty");
    const std::vector<float> x = resample(a.samples, a.sample_rate, kTargetRate);
    out.push_back(Sample{prepare(x, target_len), r.class_id, r.file_name, r.fold});
  }
  return out;
}

}  // namespace inucleus
