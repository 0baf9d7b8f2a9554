#include "hessvessel/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "hessvessel/error.hpp"

namespace hessvessel {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'H', 'S', 'S', 'N'};

json config_json(const HessNetConfig& c) {
  return json{{"n_blocks", c.n_blocks},         {"proj_channels", c.proj_channels},
              {"proj_kernel", c.proj_kernel},   {"mlp_hidden", c.mlp_hidden},
              {"head_channels", c.head_channels}, {"head_kernel", c.head_kernel}};
}

HessNetConfig parse_config(const json& j) {
  if (!j.is_object()) throw SpecError("network config must be a JSON object");
  HessNetConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "n_blocks") {
      c.n_blocks = value.get<std::size_t>();
    } else if (key == "proj_channels") {
      c.proj_channels = value.get<std::size_t>();
    } else if (key == "proj_kernel") {
      c.proj_kernel = value.get<std::size_t>();
    } else if (key == "mlp_hidden") {
      c.mlp_hidden = value.get<std::vector<std::size_t>>();
    } else if (key == "head_channels") {
      c.head_channels = value.get<std::size_t>();
    } else if (key == "head_kernel") {
      c.head_kernel = value.get<std::size_t>();
    } else {
      throw SpecError("unknown network config key '" + key + "'");
    }
  }
  validate(c);
  return c;
}

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_array(std::ofstream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw IoError("cannot open checkpoint '" + path.string() + "'");
  }

  void bytes(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw TruncatedFileError("checkpoint '" + path_.string() + "' is truncated");
    }
  }
  template <typename T>
  T get() {
    T v;
    bytes(&v, sizeof(T));
    return v;
  }
  std::vector<double> doubles(std::size_t n) {
    std::vector<double> v(n);
    bytes(v.data(), n * sizeof(double));
    return v;
  }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::ifstream in_;
  std::filesystem::path path_;
};

}  // namespace

std::string config_to_json(const HessNetConfig& config) { return config_json(config).dump(); }

HessNetConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed network config: ") + e.what());
  }
  try {
    return parse_config(j);
  } catch (const json::exception& e) {
    throw SpecError(std::string("bad network config value: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& cp, const std::filesystem::path& path) {
  validate(cp.config);
  if (cp.params.layout() != make_layout(cp.config)) {
    throw ParameterError("checkpoint parameters do not match its network configuration");
  }
  cp.params.check_finite();
  if (cp.opt && (cp.opt->m.size() != cp.params.size() || cp.opt->v.size() != cp.params.size())) {
    throw ShapeError("optimizer state length differs from the parameter count");
  }
  const json header{{"config", config_json(cp.config)},
                    {"param_count", cp.params.size()},
                    {"seed", cp.seed},
                    {"epoch", cp.epoch},
                    {"has_optimizer_state", cp.opt.has_value()}};
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
  out.write(kMagic, 4);
  put(out, kCheckpointVersion);
  put(out, static_cast<std::uint64_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  const auto vals = cp.params.values();
  put_array(out, std::vector<double>(vals.begin(), vals.end()));
  if (cp.opt) {
    put(out, cp.opt->t);
    put_array(out, cp.opt->m);
    put_array(out, cp.opt->v);
  }
  out.flush();
  if (!out) throw IoError("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Reader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("'" + path.string() + "' is not a checkpoint (bad magic)");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kCheckpointVersion) + ")");
  }
  const auto header_len = r.get<std::uint64_t>();
  if (header_len > (1u << 20)) throw FormatError("checkpoint header length is implausible");
  std::string text(header_len, '\0');
  r.bytes(text.data(), text.size());

  Checkpoint cp;
  std::size_t count = 0;
  bool has_opt = false;
  try {
    const json header = json::parse(text);
    cp.config = parse_config(header.at("config"));
    count = header.at("param_count").get<std::size_t>();
    cp.seed = header.at("seed").get<std::uint64_t>();
    cp.epoch = header.at("epoch").get<std::uint64_t>();
    has_opt = header.at("has_optimizer_state").get<bool>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad checkpoint header: ") + e.what());
  } catch (const ParameterError& e) {
    throw FormatError(std::string("bad checkpoint header: ") + e.what());
  }
  cp.params = ParamStore(cp.config);
  if (count != cp.params.size()) {
    throw FormatError("checkpoint parameter count does not match its configuration");
  }
  const auto vals = r.doubles(count);
  std::copy(vals.begin(), vals.end(), cp.params.values().begin());
  if (has_opt) {
    OptState st;
    st.t = r.get<std::uint64_t>();
    st.m = r.doubles(count);
    st.v = r.doubles(count);
    cp.opt = std::move(st);
  }
  if (!r.at_end()) throw FormatError("trailing bytes after checkpoint data");
  return cp;
}

}  // namespace hessvessel
