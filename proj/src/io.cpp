#include "tgcca/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace tgcca {

namespace {

using nlohmann::json;

static_assert(sizeof(double) == 8);

void put_f64_le(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  if constexpr (std::endian::native == std::endian::big)
    bits = __builtin_bswap64(bits);
  char buf[8];
  std::memcpy(buf, &bits, 8);
  os.write(buf, 8);
}

double get_f64_le(std::istream& is) {
  char buf[8];
  is.read(buf, 8);
  std::uint64_t bits;
  std::memcpy(&bits, buf, 8);
  if constexpr (std::endian::native == std::endian::big)
    bits = __builtin_bswap64(bits);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void write_tensor(const std::string& path, const DenseTensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("write_tensor: cannot open " + path);
  os << "TNSRv1 f64 " << t.order();
  for (Index d : t.dims()) os << ' ' << d;
  os << '\n';
  for (Index i = 0; i < t.size(); ++i) put_f64_le(os, t.data()[i]);
  if (!os) throw ConfigError("write_tensor: write failed for " + path);
}

DenseTensor read_tensor(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("read_tensor: cannot open " + path);
  std::string header;
  if (!std::getline(is, header))
    throw ConfigError("read_tensor: missing header in " + path);
  std::istringstream hs(header);
  std::string magic, dtype;
  Index order = 0;
  hs >> magic >> dtype >> order;
  if (magic != "TNSRv1" || dtype != "f64" || order < 1)
    throw ConfigError("read_tensor: bad header in " + path);
  std::vector<Index> dims(static_cast<size_t>(order));
  Index total = 1;
  for (auto& d : dims) {
    if (!(hs >> d) || d < 1)
      throw ConfigError("read_tensor: bad dims in " + path);
    total *= d;
  }
  DenseTensor t(std::move(dims));
  for (Index i = 0; i < total; ++i) t.data()[i] = get_f64_le(is);
  if (!is) throw ConfigError("read_tensor: truncated data in " + path);
  if (is.peek() != std::ifstream::traits_type::eof())
    throw ConfigError("read_tensor: trailing bytes in " + path);
  return t;
}

std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  os << text;
  if (!os) throw ConfigError("write failed for " + path);
}

namespace {

std::vector<Index> parse_dims(const json& j) {
  std::vector<Index> dims;
  for (const auto& v : j) dims.push_back(v.get<Index>());
  if (dims.empty()) throw ConfigError("config: empty dims");
  return dims;
}

json parse_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config: invalid JSON");
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  return j;
}

}  // namespace

SimSpec parse_sim_config(const std::string& json_text) {
  json j = parse_json(json_text);
  SimSpec spec;
  if (j.contains("eta"))
    spec.eta = j["eta"].get<double>();
  else if (j.contains("snr_db"))
    spec.eta = std::pow(10.0, j["snr_db"].get<double>() / 20.0);
  spec.n = j.value("n", 100);
  spec.folds = j.value("folds", 1);
  spec.seed = j.value("seed", std::uint64_t{0});
  if (!j.contains("blocks") || !j["blocks"].is_array())
    throw ConfigError("sim config: blocks array required");
  for (const auto& jb : j["blocks"]) {
    SimBlockSpec b;
    b.dims = parse_dims(jb.at("dims"));
    b.rho = jb.value("rho", std::sqrt(0.8));
    ShapeSpec shape;
    if (jb.contains("shape"))
      shape = builtin_shape(jb["shape"].get<std::string>(), b.dims);
    else if (jb.contains("shape_file"))
      shape = shape_from_tensor(read_tensor(jb["shape_file"]),
                                jb["shape_file"].get<std::string>());
    else
      throw ConfigError("sim config: block needs shape or shape_file");
    b.w = shape.cp;
    if (jb.contains("noise_shape")) {
      const auto& jn = jb["noise_shape"];
      ShapeSpec ns = jn.is_string() && !jn.get<std::string>().ends_with(".tnsr")
                         ? builtin_shape(jn.get<std::string>(), b.dims)
                         : shape_from_tensor(read_tensor(jn.get<std::string>()),
                                             "noise");
      b.noise_shape = std::move(ns.mask);
    }
    spec.blocks.push_back(std::move(b));
  }
  spec.validate();
  return spec;
}

FitConfig parse_fit_config(const std::string& json_text) {
  json j = parse_json(json_text);
  FitConfig cfg;
  if (j.contains("blocks"))
    for (const auto& p : j["blocks"])
      cfg.block_paths.push_back(p.get<std::string>());
  if (j.contains("design") && !j["design"].is_string()) {
    const auto& jd = j["design"];
    const Index rows = static_cast<Index>(jd.size());
    cfg.design = Matrix::Zero(rows, rows);
    for (Index r = 0; r < rows; ++r) {
      const auto& jr = jd[static_cast<size_t>(r)];
      if (static_cast<Index>(jr.size()) != rows)
        throw ConfigError("fit config: design must be square");
      for (Index c = 0; c < rows; ++c)
        cfg.design(r, c) = jr[static_cast<size_t>(c)].get<double>();
    }
  }
  const std::string scheme = j.value("scheme", std::string("identity"));
  if (scheme == "identity")
    cfg.scheme = Scheme::identity;
  else if (scheme == "square")
    cfg.scheme = Scheme::square;
  else
    throw ConfigError("fit config: unknown scheme '" + scheme + "'");

  SolverOptions& o = cfg.opts;
  if (j.contains("ranks"))
    for (const auto& r : j["ranks"]) o.ranks.push_back(r.get<Index>());
  const std::string regime = j.value("regime", std::string("separable"));
  if (regime == "separable")
    o.regime = Regime::separable;
  else if (regime == "nonseparable")
    o.regime = Regime::nonseparable;
  else
    throw ConfigError("fit config: unknown regime '" + regime + "'");
  if (j.contains("tau")) {
    if (j["tau"].is_array())
      for (const auto& t : j["tau"]) o.tau.push_back(t.get<double>());
    else
      o.tau.assign(std::max<size_t>(cfg.block_paths.size(), 1),
                   j["tau"].get<double>());
  }
  o.eps_stop = j.value("eps_stop", o.eps_stop);
  o.max_iter = j.value("max_iter", o.max_iter);
  o.n_starts = j.value("n_starts", o.n_starts);
  o.seed = j.value("seed", o.seed);
  if (j.contains("orth_mode")) {
    const auto& jo = j["orth_mode"];
    if (jo.is_string() && jo.get<std::string>() == "all") {
      o.orth.all_modes = true;
    } else if (jo.is_number_integer() && jo.get<Index>() >= 1) {
      o.orth.all_modes = false;
      o.orth.mode = jo.get<Index>();
    } else {
      throw ConfigError("fit config: orth_mode must be \"all\" or a mode >= 1");
    }
  }
  o.identity_m = j.value("identity_m", o.identity_m);
  o.use_tandem = j.value("use_tandem", o.use_tandem);
  cfg.model = j.value("model", cfg.model);
  return cfg;
}

}  // namespace tgcca
