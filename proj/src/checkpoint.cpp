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

#include "inucleus/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "inucleus/errors.hpp"

namespace inucleus {

namespace {

using nlohmann::json;

static_assert(sizeof(float) == 4);

template <typename U>
void put_le(std::vector<std::uint8_t>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <typename U>
U get_le(const std::uint8_t* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
  return v;
}

void put_floats(std::vector<std::uint8_t>& out, const Tensor<float>& t) {
  for (float f : t.values()) put_le(out, std::bit_cast<std::uint32_t>(f));
}

// Appends the tensor data and returns its manifest entry.
json add_blob(std::vector<std::uint8_t>& blobs, const std::string& name, const Tensor<float>& t,
              json entry = json::object()) {
  entry["name"] = name;
  entry["dtype"] = "f32";
  entry["shape"] = t.shape();
  entry["offset"] = blobs.size();
  put_floats(blobs, t);
  return entry;
}

Tensor<float> read_tensor(const json& entry, const std::uint8_t* blobs, std::size_t blob_len) {
  const std::string name = entry.at("name").get<std::string>();
  if (entry.at("dtype").get<std::string>() != "f32") {
    throw CheckpointError("tensor '" + name + "': unsupported dtype " +
                          entry.at("dtype").dump());
  }
  const Shape shape = entry.at("shape").get<Shape>();
  const std::size_t offset = entry.at("offset").get<std::size_t>();
  const std::size_t n = shape_size(shape);
  if (shape.empty() || n == 0 || offset > blob_len || (blob_len - offset) / 4 < n) {
    throw CheckpointError("tensor '" + name + "' extends past the end of the file");
  }
  Tensor<float> t(shape);
  const std::uint8_t* p = blobs + offset;
  for (std::size_t i = 0; i < n; ++i) t[i] = std::bit_cast<float>(get_le<std::uint32_t>(p + 4 * i));
  return t;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Model<float>& model,
                                               const AdamState<float>* optimizer,
                                               const CheckpointMeta& meta) {
  std::vector<std::uint8_t> blobs;
  json manifest = json::array();
  for (const Param<float>& p : model.params()) {
    manifest.push_back(add_blob(blobs, p.name, p.value,
                                json{{"trainable", p.trainable},
                                     {"role", to_string(p.role)},
                                     {"initialized", p.initialized}}));
  }
  json header;
  header["format"] = "inucleus-checkpoint";
  header["version"] = kCheckpointVersion;
  header["config"] = to_json(model.config());
  header["tensors"] = std::move(manifest);
  if (optimizer) {
    json opt{{"type", "adam"},      {"step", optimizer->step}, {"lr", optimizer->lr},
             {"beta1", optimizer->beta1}, {"beta2", optimizer->beta2}, {"eps", optimizer->eps}};
    json moments = json::array();
    const auto& params = model.params();
    if (!optimizer->m.empty()) {
      for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i].trainable) continue;
        moments.push_back(add_blob(blobs, "optimizer.m/" + params[i].name, optimizer->m.at(i)));
        moments.push_back(add_blob(blobs, "optimizer.v/" + params[i].name, optimizer->v.at(i)));
      }
    }
    opt["moments"] = std::move(moments);
    header["optimizer"] = std::move(opt);
  }
  header["meta"] = json{{"epoch", meta.epoch},
                        {"seed", meta.seed},
                        {"loss_digest", meta.loss_digest},
                        {"class_names", meta.class_names}};

  const std::string text = header.dump();
  std::vector<std::uint8_t> out(kCheckpointMagic, kCheckpointMagic + 4);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), blobs.begin(), blobs.end());
  return out;
}

Checkpoint parse_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw CheckpointError("not a checkpoint (bad magic)");
  }
  if (bytes.size() < 16) throw CheckpointError("truncated checkpoint header");
  const auto version = get_le<std::uint32_t>(bytes.data() + 4);
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) +
                          " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const auto header_len = get_le<std::uint64_t>(bytes.data() + 8);
  if (header_len > bytes.size() - 16) throw CheckpointError("truncated checkpoint header");
  json header;
  try {
    header = json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint header: ") + e.what());
  }
  const std::uint8_t* blobs = bytes.data() + 16 + header_len;
  const std::size_t blob_len = bytes.size() - 16 - header_len;

  Checkpoint ck;
  try {
    ck.config = config_from_json(header.at("config"));
    for (const json& e : header.at("tensors")) {
      const std::size_t i =
          ck.params.add(e.at("name").get<std::string>(), read_tensor(e, blobs, blob_len),
                        e.at("trainable").get<bool>(),
                        param_role_from_string(e.at("role").get<std::string>()));
      ck.params[i].initialized = e.at("initialized").get<bool>();
    }
    if (header.contains("optimizer")) {
      const json& o = header["optimizer"];
      AdamState<float> s;
      s.step = o.at("step").get<std::uint64_t>();
      s.lr = o.at("lr").get<double>();
      s.beta1 = o.at("beta1").get<double>();
      s.beta2 = o.at("beta2").get<double>();
      s.eps = o.at("eps").get<double>();
      const json& moments = o.at("moments");
      if (!moments.empty()) {
        s.m.resize(ck.params.size());
        s.v.resize(ck.params.size());
        for (const json& e : moments) {
          const std::string name = e.at("name").get<std::string>();
          const auto slash = name.find('/');
          if (slash == std::string::npos) throw CheckpointError("bad moment name '" + name + "'");
          const std::size_t idx = ck.params.index_of(name.substr(slash + 1));
          Tensor<float> t = read_tensor(e, blobs, blob_len);
          if (t.shape() != ck.params[idx].value.shape()) {
            throw CheckpointError("moment '" + name + "' does not match its parameter shape");
          }
          (name.compare(0, slash, "optimizer.m") == 0 ? s.m : s.v)[idx] = std::move(t);
        }
      }
      ck.optimizer = std::move(s);
    }
    const json& m = header.at("meta");
    ck.meta.epoch = m.at("epoch").get<std::uint64_t>();
    ck.meta.seed = m.at("seed").get<std::uint64_t>();
    ck.meta.loss_digest = m.at("loss_digest").get<std::string>();
    ck.meta.class_names = m.at("class_names").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint header: ") + e.what());
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Model<float>& model,
                     const AdamState<float>* optimizer, const CheckpointMeta& meta) {
  const std::vector<std::uint8_t> bytes = serialize_checkpoint(model, optimizer, meta);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint '" + tmp.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at '" + path.string() + "': " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_checkpoint(bytes);
}

void load_parameters(Model<float>& model, const Checkpoint& checkpoint) {
  ParamStore<float>& dst = model.params();
  if (dst.size() != checkpoint.params.size()) {
    throw ShapeError("checkpoint holds " + std::to_string(checkpoint.params.size()) +
                     " tensors, model '" + model.config().name + "' has " +
                     std::to_string(dst.size()));
  }
  for (const Param<float>& p : dst) {
    if (!checkpoint.params.contains(p.name)) {
      throw ShapeError("checkpoint has no tensor '" + p.name + "'");
    }
    const Tensor<float>& v = checkpoint.params.get(p.name).value;
    if (v.shape() != p.value.shape()) {
      throw ShapeError("tensor '" + p.name + "' is " + shape_string(v.shape()) +
                       " in the checkpoint, model expects " + shape_string(p.value.shape()));
    }
  }
  for (Param<float>& p : dst) {
    const Param<float>& src = checkpoint.params.get(p.name);
    p.value = src.value;
    p.initialized = src.initialized;
  }
}

}  // namespace inucleus
