#include "delaycast/model_io.hpp"

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace delaycast {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void put_f64(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>(bits & 0xff));
    bits >>= 8;
  }
}

double get_f64(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(p[i]);
  return std::bit_cast<double>(bits);
}

std::string header_line() {
  return std::string(kModelMagic) + " v" + std::to_string(kModelFormatVersion) + "\n";
}

ModelKind kind_from_manifest(const nlohmann::json& m) {
  try {
    return parse_model_kind(m.at("kind").get<std::string>());
  } catch (const DataError& e) {
    throw ModelFileError("format", e.what());
  }
}

struct Parsed {
  nlohmann::json manifest;
  std::string_view payload;
};

Parsed split_file(std::string_view bytes) {
  const auto nl = bytes.find('\n');
  if (nl == std::string_view::npos || bytes.substr(0, kModelMagic.size()) != kModelMagic)
    throw ModelFileError("format", "not a model file (bad magic)");
  const std::string_view first = bytes.substr(0, nl + 1);
  if (first != header_line())
    throw ModelFileError("version", "unsupported model file version '" +
                                        std::string(first.substr(0, first.size() - 1)) +
                                        "', expected v" + std::to_string(kModelFormatVersion));
  const auto nl2 = bytes.find('\n', nl + 1);
  if (nl2 == std::string_view::npos) throw ModelFileError("checksum", "model file truncated");
  std::size_t len = 0;
  try {
    len = std::stoull(std::string(bytes.substr(nl + 1, nl2 - nl - 1)));
  } catch (const std::exception&) {
    throw ModelFileError("format", "bad manifest length");
  }
  if (bytes.size() < nl2 + 1 + len) throw ModelFileError("checksum", "model file truncated");
  Parsed p;
  try {
    p.manifest = nlohmann::json::parse(bytes.substr(nl2 + 1, len));
  } catch (const nlohmann::json::exception& e) {
    throw ModelFileError("format", std::string("bad manifest: ") + e.what());
  }
  p.payload = bytes.substr(nl2 + 1 + len);
  return p;
}

}  // namespace

std::string serialize_model(const Model& model, const std::optional<CheckpointInfo>& checkpoint) {
  std::string payload;
  nlohmann::json table = nlohmann::json::array();
  for (const auto& t : model.tensors()) {
    table.push_back({{"name", t.name},
                     {"rows", t.value.rows()},
                     {"cols", t.value.cols()},
                     {"offset", payload.size()}});
    for (Eigen::Index i = 0; i < t.value.rows(); ++i)
      for (Eigen::Index j = 0; j < t.value.cols(); ++j) put_f64(payload, t.value(i, j));
  }
  nlohmann::json m;
  m["kind"] = std::string(to_string(model.kind()));
  m["target_mode"] = std::string(to_string(model.mode));
  m["feature_names"] = model.feature_names;
  m["target_names"] = model.target_names;
  m["window"] = model.window();
  m["seed"] = model.seed;
  m["config"] = model.config();
  m["codebook"] = model.codebook ? model.codebook->to_json() : nlohmann::json(nullptr);
  m["history"] = model.history;
  m["tensors"] = table;
  m["payload_bytes"] = payload.size();
  m["checksum"] = hex64(fnv1a64(payload));
  if (checkpoint) m["checkpoint"] = {{"epoch", checkpoint->epoch}, {"metrics", checkpoint->metrics}};
  const std::string manifest = m.dump(2) + "\n";
  return header_line() + std::to_string(manifest.size()) + "\n" + manifest + payload;
}

std::unique_ptr<Model> deserialize_model(std::string_view bytes, std::optional<ModelKind> expected) {
  const Parsed p = split_file(bytes);
  const auto& m = p.manifest;
  const ModelKind kind = kind_from_manifest(m);
  if (expected && *expected != kind)
    throw ModelFileError("kind", "model file holds a '" + std::string(to_string(kind)) +
                                     "' model, expected '" + std::string(to_string(*expected)) + "'");
  try {
    const auto declared = m.at("payload_bytes").get<std::size_t>();
    if (p.payload.size() != declared ||
        hex64(fnv1a64(p.payload)) != m.at("checksum").get<std::string>())
      throw ModelFileError("checksum", "model file checksum mismatch (corrupt or truncated)");

    std::vector<NamedTensor> tensors;
    for (const auto& t : m.at("tensors")) {
      const auto rows = t.at("rows").get<Eigen::Index>();
      const auto cols = t.at("cols").get<Eigen::Index>();
      const auto offset = t.at("offset").get<std::size_t>();
      if (rows < 0 || cols < 0 ||
          offset + static_cast<std::size_t>(rows * cols) * 8 > p.payload.size())
        throw ModelFileError("format", "tensor '" + t.at("name").get<std::string>() +
                                           "' overruns the data section");
      Matrix v(rows, cols);
      const char* src = p.payload.data() + offset;
      for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j, src += 8) v(i, j) = get_f64(src);
      tensors.push_back({t.at("name").get<std::string>(), std::move(v)});
    }

    ModelOptions opts;
    opts.mode = parse_target_mode(m.at("target_mode").get<std::string>());
    opts.seed = m.at("seed").get<std::uint64_t>();
    auto model = make_model(kind, opts);
    model->feature_names = m.at("feature_names").get<std::vector<std::string>>();
    model->target_names = m.at("target_names").get<std::vector<std::string>>();
    if (!m.at("codebook").is_null()) model->codebook = LabelCodebook::from_json(m.at("codebook"));
    model->history = m.at("history");
    model->restore(m.at("config"), tensors);
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ModelFileError("format", std::string("bad manifest: ") + e.what());
  }
}

void save_model(const Model& model, const std::string& path,
                const std::optional<CheckpointInfo>& checkpoint) {
  const std::string bytes = serialize_model(model, checkpoint);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io", "cannot write '" + tmp + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("io", "failed writing '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("io", "cannot move model into '" + path + "': " + ec.message());
}

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::unique_ptr<Model> load_model(const std::string& path, std::optional<ModelKind> expected) {
  return deserialize_model(slurp(path), expected);
}

nlohmann::json read_model_manifest(const std::string& path) {
  return split_file(slurp(path)).manifest;
}

}  // namespace delaycast
