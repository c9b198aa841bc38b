#include "imcgl/cli_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "imcgl/errors.hpp"

#ifndef IMCGL_VERSION
#define IMCGL_VERSION "0.0.0"
#endif

namespace imcgl {

const char* const kCodeVersion = IMCGL_VERSION;

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// ---------------------------------------------------------------- checkpoints

namespace {

constexpr std::array<char, 4> kMagic{'I', 'M', 'C', 'G'};

template <class U>
void put_le(std::ostream& out, U value) {
  std::array<char, sizeof(U)> bytes;
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = char((value >> (8 * i)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

template <class U>
bool get_le(std::istream& in, U& value) {
  std::array<unsigned char, sizeof(U)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) return false;
  value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= U(bytes[i]) << (8 * i);
  return true;
}

void put_f64(std::ostream& out, double x) { put_le(out, std::bit_cast<std::uint64_t>(x)); }

bool get_f64(std::istream& in, double& x) {
  std::uint64_t bits;
  if (!get_le(in, bits)) return false;
  x = std::bit_cast<double>(bits);
  return true;
}

}  // namespace

void write_checkpoint(std::ostream& out, const SpectralField& u, const ModelParams& params) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, std::uint32_t(u.grid_radius()));
  put_le<std::uint32_t>(out, std::uint32_t(params.N));
  put_le<std::uint32_t>(out, std::uint32_t(params.K));
  put_f64(out, params.omega);
  put_f64(out, params.beta);
  put_f64(out, params.gamma);
  put_le<std::uint64_t>(out, std::uint64_t(u.size()));
  for (const Complex& c : u.coeffs()) {
    put_f64(out, c.real());
    put_f64(out, c.imag());
  }
  if (!out) throw FormatError("failed to write checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw FormatError("not a checkpoint (bad magic)");
  Checkpoint ck;
  CheckpointHeader& h = ck.header;
  if (!get_le(in, h.version)) throw FormatError("truncated checkpoint header");
  if (h.version != kCheckpointVersion)
    throw VersionError("checkpoint version " + std::to_string(h.version) + " is not supported (expected " +
                       std::to_string(kCheckpointVersion) + ")");
  if (!get_le(in, h.grid_radius) || !get_le(in, h.N) || !get_le(in, h.K) || !get_f64(in, h.omega) ||
      !get_f64(in, h.beta) || !get_f64(in, h.gamma) || !get_le(in, h.count))
    throw FormatError("truncated checkpoint header");
  if (h.grid_radius == 0 || h.grid_radius > 64) throw FormatError("checkpoint grid radius out of range");
  const std::uint64_t side = 2 * std::uint64_t(h.grid_radius) + 1;
  if (h.count != side * side * side) throw FormatError("coefficient count mismatch");
  ck.field = SpectralField(int(h.grid_radius));
  for (Complex& c : ck.field.coeffs()) {
    double re, im;
    if (!get_f64(in, re) || !get_f64(in, im)) throw FormatError("coefficient count mismatch");
    c = Complex(re, im);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("coefficient count mismatch");
  return ck;
}

void save_field(const fs::path& path, const SpectralField& u, const ModelParams& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_checkpoint(out, u, params);
}

Checkpoint load_field(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_checkpoint(in);
}

// ---------------------------------------------------------------- config

namespace {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 32> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

template <class T>
std::string format_integer(T x) {
  std::array<char, 32> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& text, const std::string& what) {
  throw ParseError(key + ": cannot read '" + text + "' as " + what);
}

double parse_number(const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
  double x = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) bad_value(key, text, "a number");
  return x;
}

template <class T>
T parse_integer(const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  T x{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) bad_value(key, text, "an integer");
  return x;
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  bad_value(key, text, "a boolean");
}

template <class E>
struct EnumNames {
  std::vector<std::pair<E, std::string>> names;

  std::string get(E e) const {
    for (const auto& [v, n] : names)
      if (v == e) return n;
    return "?";
  }
  E parse(const std::string& key, const std::string& raw) const {
    const std::string text = trim(raw);
    std::string choices;
    for (const auto& [v, n] : names) {
      if (n == text) return v;
      choices += (choices.empty() ? "" : "|") + n;
    }
    bad_value(key, text, "one of " + choices);
  }
};

const EnumNames<Scheme> kSchemes{{{Scheme::ETD1, "etd1"}, {Scheme::ETD2, "etd2"}}};
const EnumNames<NonlinearityMode> kModes{{{NonlinearityMode::GinzburgLandau, "gl"},
                                          {NonlinearityMode::Zero, "zero"},
                                          {NonlinearityMode::Linear, "linear"}}};
const EnumNames<InitialKind> kInitialKinds{
    {{InitialKind::Random, "random"}, {InitialKind::Mode, "mode"}, {InitialKind::Checkpoint, "checkpoint"}}};
const EnumNames<BvpSolver> kSolvers{{{BvpSolver::Newton, "newton"}, {BvpSolver::FixedPoint, "fixed-point"}}};

struct Binding {
  std::string section;
  std::string key;
  std::function<void(const std::string& name, const std::string& text)> set;
  std::function<std::string()> get;
};

Binding number(const char* section, const char* key, double& x) {
  return {section, key, [&x](const std::string& n, const std::string& t) { x = parse_number(n, t); },
          [&x] { return format_number(x); }};
}

template <class T>
Binding integer(const char* section, const char* key, T& x) {
  return {section, key, [&x](const std::string& n, const std::string& t) { x = parse_integer<T>(n, t); },
          [&x] { return format_integer(x); }};
}

Binding flag(const char* section, const char* key, bool& x) {
  return {section, key, [&x](const std::string& n, const std::string& t) { x = parse_bool(n, t); },
          [&x] { return std::string(x ? "true" : "false"); }};
}

Binding text(const char* section, const char* key, std::string& x) {
  return {section, key, [&x](const std::string&, const std::string& t) { x = trim(t); }, [&x] { return x; }};
}

template <class E>
Binding choice(const char* section, const char* key, E& x, const EnumNames<E>& names) {
  return {section, key, [&x, &names](const std::string& n, const std::string& t) { x = names.parse(n, t); },
          [&x, &names] { return names.get(x); }};
}

Binding number_list(const char* section, const char* key, std::vector<double>& xs) {
  return {section, key,
          [&xs](const std::string& n, const std::string& t) {
            xs.clear();
            std::stringstream ss(t);
            std::string item;
            while (std::getline(ss, item, ',')) xs.push_back(parse_number(n, item));
          },
          [&xs] {
            std::string s;
            for (double x : xs) s += (s.empty() ? "" : ", ") + format_number(x);
            return s;
          }};
}

std::vector<Binding> bindings(RunConfig& c) {
  return {
      integer("run", "seed", c.seed),
      number("model", "omega", c.model.omega),
      number("model", "beta", c.model.beta),
      number("model", "gamma", c.model.gamma),
      number("model", "f_support_radius", c.model.f_support_radius),
      number("model", "C_star", c.model.C_star),
      number("model", "s", c.model.s),
      number("model", "s0", c.model.s0),
      number("model", "R0", c.model.R0),
      number("model", "R1", c.model.R1),
      number("model", "Rtilde", c.model.Rtilde),
      integer("model", "N", c.model.N),
      integer("model", "K", c.model.K),
      integer("grid", "radius", c.grid.grid_radius),
      integer("grid", "points", c.grid.grid_points),
      flag("grid", "dealias", c.grid.dealias),
      number("integrator", "dt", c.integrator.dt),
      choice("integrator", "scheme", c.integrator.scheme, kSchemes),
      number("integrator", "horizon", c.integrator.horizon),
      choice("override", "mode", c.overrides.mode, kModes),
      {"override", "linear_rate",
       [&c](const std::string& n, const std::string& t) {
         std::vector<double> xs;
         number_list("", "", xs).set(n, t);
         if (xs.size() != 2) bad_value(n, t, "'re, im'");
         c.overrides.linear_rate = Complex(xs[0], xs[1]);
       },
       [&c] {
         return format_number(c.overrides.linear_rate.real()) + ", " + format_number(c.overrides.linear_rate.imag());
       }},
      flag("override", "t_map", c.overrides.t_map),
      choice("initial", "kind", c.initial.kind, kInitialKinds),
      number("initial", "amplitude", c.initial.amplitude),
      number("initial", "decay", c.initial.decay),
      {"initial", "mode",
       [&c](const std::string& n, const std::string& t) {
         std::vector<double> xs;
         number_list("", "", xs).set(n, t);
         if (xs.size() != 3) bad_value(n, t, "'k, l, m'");
         for (double x : xs)
           if (x != std::round(x)) bad_value(n, t, "integer mode indices");
         c.initial.mode = {int(xs[0]), int(xs[1]), int(xs[2])};
       },
       [&c] {
         return std::to_string(c.initial.mode.k) + ", " + std::to_string(c.initial.mode.l) + ", " +
                std::to_string(c.initial.mode.m);
       }},
      text("initial", "checkpoint", c.initial.checkpoint),
      integer("n_search", "K", c.n_search.K),
      number("n_search", "epsilon", c.n_search.epsilon),
      integer("n_search", "N_lo", c.n_search.N_lo),
      integer("n_search", "N_hi", c.n_search.N_hi),
      integer("n_search", "samples", c.n_search.samples),
      number("n_search", "transient", c.n_search.transient),
      integer("cone", "pairs", c.cone.pairs),
      number("cone", "horizon", c.cone.horizon),
      number("cone", "transient", c.cone.transient),
      integer("cone", "admissibility_samples", c.cone.admissibility_samples),
      number("cone", "mu", c.cone.options.mu),
      number("cone", "tolerance_factor", c.cone.options.tolerance_factor),
      number("cone", "boundary_band", c.cone.options.boundary_band),
      number("cone", "qims_kappa", c.cone.qims_kappa),
      number("cone", "qims_C2", c.cone.qims_C2),
      integer("manifold", "samples", c.manifold.samples),
      number("manifold", "amplitude", c.manifold.amplitude),
      number("manifold", "tol", c.manifold.options.tol),
      number("manifold", "T0", c.manifold.options.T0),
      number("manifold", "dT", c.manifold.options.dT),
      number("manifold", "T_max", c.manifold.options.T_max),
      integer("manifold", "min_gaps", c.manifold.options.min_gaps),
      choice("manifold", "solver", c.manifold.options.bvp.solver, kSolvers),
      flag("manifold", "fallback", c.manifold.options.bvp.fallback),
      number("manifold", "shooting_tol", c.manifold.options.bvp.tol),
      integer("manifold", "max_newton", c.manifold.options.bvp.max_newton),
      integer("manifold", "max_krylov", c.manifold.options.bvp.max_krylov),
      integer("manifold", "max_fixed_point", c.manifold.options.bvp.max_fixed_point),
      number("manifold", "qims_kappa", c.manifold.options.bvp.qims_kappa),
      number("manifold", "qims_C2", c.manifold.options.bvp.qims_C2),
      integer("track", "starts", c.track.starts),
      number("track", "horizon", c.track.horizon),
      number("track", "fit_start", c.track.fit_start),
      flag("track", "sensitivity", c.track.sensitivity),
      number_list("smoothness", "h", c.smoothness.h),
      integer("smoothness", "directions", c.smoothness.directions),
      integer("calibrate", "starts", c.calibrate.starts),
      number("calibrate", "horizon", c.calibrate.horizon),
      number("calibrate", "tail_fraction", c.calibrate.tail_fraction),
      number("calibrate", "margin", c.calibrate.margin),
  };
}

[[noreturn]] void invalid(const std::string& key, const std::string& rule) {
  throw ConfigError("invalid " + key + ": requires " + rule);
}

bool is_step_multiple(double T, double dt) {
  const double steps = T / dt;
  return std::abs(steps - std::round(steps)) <= 1e-9 * std::max(1.0, steps);
}

}  // namespace

Model RunConfig::build_model() const {
  Discretization disc = grid;
  return Model(model, disc, overrides);
}

ManifoldOptions RunConfig::manifold_options() const {
  ManifoldOptions o = manifold.options;
  o.integrator = integrator;
  o.integrator.dealias = grid.dealias;
  return o;
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"simulate",       "cone-check", "n-search",        "build-manifold",
                                                 "track",          "probe-smoothness", "calibrate-radii"};
  return names;
}

void validate(const RunConfig& c) {
  c.model.validate();
  if (c.grid.grid_radius < 1) invalid("[grid] radius", "radius >= 1");
  if (c.grid.grid_points != 0 && c.grid.grid_points < 2 * c.grid.grid_radius + 1)
    invalid("[grid] points", "0 (auto) or points >= 2 radius + 1");
  if (!(c.integrator.dt > 0.0)) invalid("[integrator] dt", "dt > 0");
  if (!(c.integrator.horizon > 0.0) || !is_step_multiple(c.integrator.horizon, c.integrator.dt))
    invalid("[integrator] horizon", "a positive multiple of dt");
  if (!(c.initial.amplitude >= 0.0)) invalid("[initial] amplitude", "amplitude >= 0");
  if (!(c.initial.decay >= 0.0)) invalid("[initial] decay", "decay >= 0");
  if (c.initial.kind == InitialKind::Checkpoint && c.initial.checkpoint.empty())
    invalid("[initial] checkpoint", "a path when kind = checkpoint");
  if (c.n_search.K < 1) invalid("[n_search] K", "K >= 1");
  if (!(c.n_search.epsilon > 0.0)) invalid("[n_search] epsilon", "epsilon > 0");
  if (c.n_search.N_lo > c.n_search.N_hi) invalid("[n_search] N_lo", "N_lo <= N_hi");
  if (c.n_search.samples < 1) invalid("[n_search] samples", "samples >= 1");
  if (!(c.n_search.transient >= 0.0) || !is_step_multiple(c.n_search.transient, c.integrator.dt))
    invalid("[n_search] transient", "a non-negative multiple of dt");
  if (c.cone.pairs < 1) invalid("[cone] pairs", "pairs >= 1");
  if (!(c.cone.horizon > 0.0) || !is_step_multiple(c.cone.horizon, c.integrator.dt))
    invalid("[cone] horizon", "a positive multiple of dt");
  if (!(c.cone.transient >= 0.0) || !is_step_multiple(c.cone.transient, c.integrator.dt))
    invalid("[cone] transient", "a non-negative multiple of dt");
  if (c.cone.admissibility_samples < 1) invalid("[cone] admissibility_samples", "admissibility_samples >= 1");
  if (!(c.cone.options.mu > 0.0)) invalid("[cone] mu", "mu > 0");
  if (c.manifold.samples < 1) invalid("[manifold] samples", "samples >= 1");
  if (!(c.manifold.amplitude >= 0.0)) invalid("[manifold] amplitude", "amplitude >= 0");
  if (!(c.manifold.options.tol > 0.0)) invalid("[manifold] tol", "tol > 0");
  if (!(c.manifold.options.bvp.tol > 0.0)) invalid("[manifold] shooting_tol", "shooting_tol > 0");
  if (!(c.manifold.options.T_max > 0.0)) invalid("[manifold] T_max", "T_max > 0");
  if (c.manifold.options.min_gaps < 1) invalid("[manifold] min_gaps", "min_gaps >= 1");
  if (c.track.starts < 1) invalid("[track] starts", "starts >= 1");
  if (!(c.track.horizon > 0.0) || !is_step_multiple(c.track.horizon, c.integrator.dt))
    invalid("[track] horizon", "a positive multiple of dt");
  if (!(c.track.fit_start >= 0.0 && c.track.fit_start < c.track.horizon))
    invalid("[track] fit_start", "0 <= fit_start < horizon");
  if (c.smoothness.h.size() < 2) invalid("[smoothness] h", "at least two step sizes");
  for (double h : c.smoothness.h)
    if (!(h > 0.0)) invalid("[smoothness] h", "positive step sizes");
  if (c.smoothness.directions < 1) invalid("[smoothness] directions", "directions >= 1");
  if (c.calibrate.starts < 1) invalid("[calibrate] starts", "starts >= 1");
  if (!(c.calibrate.horizon > 0.0) || !is_step_multiple(c.calibrate.horizon, c.integrator.dt))
    invalid("[calibrate] horizon", "a positive multiple of dt");
  if (!(c.calibrate.tail_fraction >= 0.0 && c.calibrate.tail_fraction < 1.0))
    invalid("[calibrate] tail_fraction", "0 <= tail_fraction < 1");
  if (!(c.calibrate.margin >= 1.0)) invalid("[calibrate] margin", "margin >= 1");
}

RunConfig parse_config(std::istream& in, const std::string& source) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ParseError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  RunConfig cfg;
  std::vector<Binding> table = bindings(cfg);
  std::map<std::pair<std::string, std::string>, const Binding*> lookup;
  for (const Binding& b : table) lookup[{b.section, b.key}] = &b;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError(source + ": key '" + section + "' must sit inside a [section]");
    for (const auto& [key, value] : body) {
      const auto it = lookup.find({section, key});
      if (it == lookup.end()) throw ConfigError(source + ": unknown key [" + section + "] " + key);
      it->second->set("[" + section + "] " + key, value.data());
    }
  }
  validate(cfg);
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config(in, path.string());
}

std::string format_config(const RunConfig& cfg) {
  RunConfig copy = cfg;
  std::ostringstream out;
  std::string section;
  for (const Binding& b : bindings(copy)) {
    if (b.section != section) {
      out << (section.empty() ? "" : "\n") << "[" << b.section << "]\n";
      section = b.section;
    }
    out << b.key << " = " << b.get() << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------- sampling

SpectralField random_field(int grid_radius, std::mt19937_64& rng, double h_norm, double decay) {
  std::normal_distribution<double> normal;
  SpectralField u(grid_radius);
  const Lattice& lattice = u.lattice();
  for (Eigen::Index i = 0; i < lattice.size(); ++i) {
    const double re = normal(rng), im = normal(rng);
    u.coeffs()[i] = std::exp(-decay * lattice.mode(i).lap_eig()) * Complex(re, im);
  }
  const double norm = sobolev_norm(u, 0.0);
  return norm > 0.0 ? (h_norm / norm) * u : u;
}

SpectralField initial_state(const RunConfig& cfg, std::mt19937_64& rng) {
  const int G = cfg.grid.grid_radius;
  switch (cfg.initial.kind) {
    case InitialKind::Random:
      return random_field(G, rng, cfg.initial.amplitude, cfg.initial.decay);
    case InitialKind::Mode: {
      if (!Lattice::of(G).contains(cfg.initial.mode)) invalid("[initial] mode", "a mode inside the grid cube");
      SpectralField u = SpectralField::basis(G, cfg.initial.mode);
      return (cfg.initial.amplitude / sobolev_norm(u, 0.0)) * u;
    }
    case InitialKind::Checkpoint: {
      Checkpoint ck = load_field(cfg.initial.checkpoint);
      if (ck.field.grid_radius() != G) throw GridError("checkpoint grid radius differs from [grid] radius");
      return ck.field;
    }
  }
  return SpectralField(G);
}

// ---------------------------------------------------------------- outputs

namespace {

class Table {
 public:
  Table(const fs::path& path, std::initializer_list<const char*> header) : out_(path, std::ios::trunc) {
    if (!out_) throw FormatError("cannot open " + path.string() + " for writing");
    std::string line;
    for (const char* h : header) line += (line.empty() ? "" : ",") + std::string(h);
    out_ << line << '\n';
  }

  template <class... T>
  void row(const T&... values) {
    static_assert(sizeof...(T) > 0);
    std::string line;
    (append(line, values), ...);
    out_ << line << '\n';
  }

 private:
  static void sep(std::string& line) {
    if (!line.empty()) line += ',';
  }
  static void append(std::string& line, double x) {
    sep(line);
    line += format_number(x);
  }
  static void append(std::string& line, int x) {
    sep(line);
    line += format_integer(x);
  }
  static void append(std::string& line, std::size_t x) {
    sep(line);
    line += format_integer(x);
  }
  static void append(std::string& line, const std::string& s) {
    sep(line);
    line += s;
  }
  static void append(std::string& line, const char* s) { append(line, std::string(s)); }
  static void append(std::string& line, bool b) { append(line, b ? 1 : 0); }

  std::ofstream out_;
};

json number_json(double x) {
  if (std::isfinite(x)) return x;
  return format_number(x);
}

json vector_json(const std::vector<double>& xs) {
  json a = json::array();
  for (double x : xs) a.push_back(number_json(x));
  return a;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << text;
}

void write_manifest(const RunConfig& cfg) {
  fs::create_directories(cfg.out);
  write_text(cfg.out / "config.ini", format_config(cfg));
  json m;
  m["code_version"] = kCodeVersion;
  m["experiment"] = cfg.experiment;
  m["seed"] = cfg.seed;
  m["checkpoint_version"] = kCheckpointVersion;
  write_text(cfg.out / "manifest.json", m.dump(2) + "\n");
}

IntegratorConfig with_horizon(const RunConfig& cfg, double horizon) {
  IntegratorConfig ic = cfg.integrator;
  ic.dealias = cfg.grid.dealias;
  ic.horizon = horizon;
  return ic;
}

// Random start evolved for `transient` (no evolution when 0).
SpectralField settled_start(const RunConfig& cfg, const Model& model, std::mt19937_64& rng, double transient) {
  SpectralField u = initial_state(cfg, rng);
  if (transient > 0.0) u = integrate(model, u, with_horizon(cfg, transient)).last();
  return u;
}

SpectralField low_sample(const RunConfig& cfg, std::mt19937_64& rng) {
  SpectralField u = project(random_field(cfg.grid.grid_radius, rng, 1.0), Projector::P_N, cfg.model.N);
  const double norm = sobolev_norm(u, 0.0);
  return norm > 0.0 ? (cfg.manifold.amplitude / norm) * u : u;
}

void run_simulate(const RunConfig& cfg, const Model& model, std::mt19937_64& rng) {
  const SpectralField u0 = initial_state(cfg, rng);
  const Trajectory traj = integrate(model, u0, with_horizon(cfg, cfg.integrator.horizon));
  Table energy(cfg.out / "energy.csv", {"t", "energy", "h1_norm", "low_norm", "high_norm"});
  const int N = cfg.model.N;
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const SpectralField& u = traj.states[i];
    energy.row(traj.times[i], sobolev_norm_sq(u, 0.0), sobolev_norm(u, 1.0),
               sobolev_norm(project(u, Projector::P_N, N), 0.0), sobolev_norm(project(u, Projector::Q_N, N), 0.0));
  }
  save_field(cfg.out / "initial.imcg", u0, cfg.model);
  save_field(cfg.out / "final.imcg", traj.last(), cfg.model);
}

void run_n_search(const RunConfig& cfg, const Model& model, std::mt19937_64& rng) {
  std::vector<SpectralField> samples;
  for (int i = 0; i < cfg.n_search.samples; ++i)
    samples.push_back(settled_start(cfg, model, rng, cfg.n_search.transient));
  const NSearchSpec& s = cfg.n_search;
  const NSearchResult res = n_search(model, s.K, s.epsilon, s.N_lo, s.N_hi, samples);
  Table table(cfg.out / "n_search.csv", {"N", "K", "max_norm", "epsilon", "admissible"});
  for (std::size_t i = 0; i < res.scanned.size(); ++i)
    table.row(res.scanned[i], s.K, res.max_norm[i], s.epsilon, res.is_admissible(res.scanned[i]));
  Table samples_table(cfg.out / "samples.csv", {"sample", "h_norm", "h1_norm"});
  for (std::size_t i = 0; i < samples.size(); ++i)
    samples_table.row(i, sobolev_norm(samples[i], 0.0), sobolev_norm(samples[i], 1.0));
}

void run_cone_check(const RunConfig& cfg, const Model& model, std::mt19937_64& rng) {
  const ConeSpec& s = cfg.cone;
  std::vector<std::pair<SpectralField, SpectralField>> starts;
  std::vector<SpectralField> admissibility_samples;
  for (int i = 0; i < s.pairs; ++i) {
    SpectralField a = settled_start(cfg, model, rng, s.transient);
    SpectralField b = settled_start(cfg, model, rng, s.transient);
    if (int(admissibility_samples.size()) < s.admissibility_samples) admissibility_samples.push_back(a);
    starts.emplace_back(std::move(a), std::move(b));
  }
  const NSearchResult adm = n_search(model, cfg.model.K, cfg.n_search.epsilon, cfg.model.N, cfg.model.N,
                                     admissibility_samples);
  std::ofstream ndjson(cfg.out / "certificates.ndjson", std::ios::trunc);
  Table summary(cfg.out / "cone_summary.csv",
                {"pair", "status", "worst_margin", "tolerance", "exit_events", "alpha_min", "alpha_max"});
  const IntegratorConfig ic = with_horizon(cfg, s.horizon);
  for (std::size_t p = 0; p < starts.size(); ++p) {
    const Trajectory t1 = integrate(model, starts[p].first, ic);
    const Trajectory t2 = integrate(model, starts[p].second, ic);
    if (std::isfinite(s.qims_C2) && (!monitor_dissipativity(model, t1, s.qims_kappa, s.qims_C2, 0.0).qims_ok ||
                                     !monitor_dissipativity(model, t2, s.qims_kappa, s.qims_C2, 0.0).qims_ok)) {
      summary.row(p, "skipped", std::nan(""), std::nan(""), 0, std::nan(""), std::nan(""));
      continue;
    }
    const ConeCertificate c = verify_cone_inequality(model, adm, t1, t2, s.options);
    json j;
    j["pair"] = p;
    j["N"] = c.N;
    j["K"] = c.K;
    j["verdict"] = c.verdict;
    j["mu"] = c.mu;
    j["tolerance"] = number_json(c.tolerance);
    j["worst_margin"] = number_json(c.worst_margin);
    j["worst_time"] = c.times.empty() ? json(nullptr) : json(c.times[c.worst_index]);
    j["exit_events"] = c.exit_events;
    j["alpha_min"] = number_json(c.alpha_min);
    j["alpha_max"] = number_json(c.alpha_max);
    j["t"] = vector_json(c.times);
    j["V"] = vector_json(c.V);
    j["dV"] = vector_json(c.dV);
    j["residual"] = vector_json(c.residual);
    ndjson << j.dump() << '\n';
    summary.row(p, c.verdict ? "certified" : "failed", c.worst_margin, c.tolerance, c.exit_events, c.alpha_min,
                c.alpha_max);
  }
}

void run_build_manifold(const RunConfig& cfg, const Model& model, std::mt19937_64& rng) {
  const ManifoldOptions opts = cfg.manifold_options();
  std::vector<GraphPoint> points;
  for (int i = 0; i < cfg.manifold.samples; ++i) points.push_back(manifold_value(model, low_sample(cfg, rng), opts));

  Table summary(cfg.out / "points.csv", {"sample", "T_used", "shooting_residual", "cauchy_gap", "gap_rate",
                                         "iterations", "u_plus_norm", "m_norm"});
  Table ladder(cfg.out / "ladder.csv", {"sample", "T", "gap"});
  Table graph(cfg.out / "graph.csv", {"sample", "k", "l", "m", "a", "u_plus_re", "u_plus_im", "m_re", "m_im"});
  const Lattice& lat = Lattice::of(cfg.grid.grid_radius);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const GraphPoint& gp = points[i];
    summary.row(i, gp.T_used, gp.shooting_residual, gp.cauchy_gap, gp.gap_rate, gp.iterations,
                sobolev_norm(gp.u_plus, 0.0), sobolev_norm(gp.m_value, 0.0));
    for (std::size_t j = 0; j < gp.ladder.size(); ++j) ladder.row(i, gp.ladder[j], gp.gaps[j]);
    for (Eigen::Index n = 0; n < lat.size(); ++n) {
      const Complex u = gp.u_plus.coeffs()[n], m = gp.m_value.coeffs()[n];
      if (u == 0.0 && m == 0.0) continue;
      const ModeIndex idx = lat.mode(n);
      graph.row(i, idx.k, idx.l, idx.m, idx.a_eig(), u.real(), u.imag(), m.real(), m.imag());
    }
    save_field(cfg.out / ("point_" + std::to_string(i) + ".imcg"), gp.point(), cfg.model);
  }
  const LipschitzReport lip = lipschitz_probe(model, points);
  Table pairs(cfg.out / "lipschitz.csv", {"i", "j", "ratio", "cone_bound"});
  for (std::size_t p = 0; p < lip.ratios.size(); ++p)
    pairs.row(lip.pair_index[p].first, lip.pair_index[p].second, lip.ratios[p], lip.cone_bound);
}

void run_track(const RunConfig& cfg, const Model& model, std::mt19937_64& rng) {
  TrackingOptions o;
  o.manifold = cfg.manifold_options();
  o.horizon = cfg.track.horizon;
  o.fit_start = cfg.track.fit_start;
  o.sensitivity = cfg.track.sensitivity;
  Table series(cfg.out / "tracking.csv", {"start", "t", "distance"});
  Table summary(cfg.out / "tracking_summary.csv",
                {"start", "rate", "fit_residual", "rate_2T", "T_used", "accepted"});
  for (int i = 0; i < cfg.track.starts; ++i) {
    const SpectralField u0 = initial_state(cfg, rng);
    const TrackingReport rep = tracking_experiment(model, u0, o, "start_" + std::to_string(i));
    for (std::size_t k = 0; k < rep.times.size(); ++k) series.row(i, rep.times[k], rep.distance[k]);
    summary.row(i, rep.rate, rep.fit_residual, rep.rate_2T, rep.trace_point.T_used, rep.accepted);
  }
}

void run_probe_smoothness(const RunConfig& cfg, const Model& model, std::mt19937_64& rng) {
  const SpectralField u = low_sample(cfg, rng);
  std::vector<SpectralField> dirs;
  for (int i = 0; i < cfg.smoothness.directions; ++i) dirs.push_back(low_sample(cfg, rng));
  const SmoothnessReport rep = smoothness_probe(model, u, dirs, cfg.smoothness.h, cfg.manifold_options());
  Table series(cfg.out / "smoothness.csv", {"direction", "h", "second_difference"});
  Table summary(cfg.out / "smoothness_summary.csv", {"direction", "exponent"});
  for (std::size_t d = 0; d < dirs.size(); ++d) {
    for (std::size_t k = 0; k < rep.h.size(); ++k) series.row(d, rep.h[k], rep.second_difference[d][k]);
    summary.row(d, rep.exponent[d]);
  }
}

void run_calibrate_radii(const RunConfig& cfg, const Model& model, std::mt19937_64& rng) {
  const CalibrateSpec& s = cfg.calibrate;
  const IntegratorConfig ic = with_horizon(cfg, s.horizon);
  Table table(cfg.out / "calibration.csv",
              {"start", "initial_h_norm", "sup_h_norm", "tail_sup_h_norm", "tail_sup_h1_norm", "tail_sup_low_h1_norm",
               "tail_sup_hs_norm", "tail_sup_abs"});
  double R_h = 0.0, R_low = 0.0, R_abs = 0.0;
  const int N = cfg.model.N;
  for (int i = 0; i < s.starts; ++i) {
    const SpectralField u0 = initial_state(cfg, rng);
    const Trajectory traj = integrate(model, u0, ic);
    const std::size_t tail = std::size_t(std::floor(s.tail_fraction * double(traj.states.size() - 1)));
    double sup_h = 0.0, t_h = 0.0, t_h1 = 0.0, t_low = 0.0, t_hs = 0.0, t_abs = 0.0;
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
      const SpectralField& u = traj.states[k];
      const double h = sobolev_norm(u, 0.0);
      sup_h = std::max(sup_h, h);
      if (k < tail) continue;
      t_h = std::max(t_h, h);
      t_h1 = std::max(t_h1, sobolev_norm(u, 1.0));
      t_low = std::max(t_low, sobolev_norm(project(u, Projector::P_N, N), 1.0));
      t_hs = std::max(t_hs, sobolev_norm(u, cfg.model.s));
      t_abs = std::max(t_abs, model.transform().to_grid(u).values.cwiseAbs().maxCoeff());
    }
    table.row(i, sobolev_norm(u0, 0.0), sup_h, t_h, t_h1, t_low, t_hs, t_abs);
    R_h = std::max(R_h, t_h);
    R_low = std::max(R_low, t_low);
    R_abs = std::max(R_abs, t_abs);
  }
  // Suggested radii as a config fragment; zero radii are floored so the fragment stays valid.
  const double floor = 1e-3;
  RunConfig suggested = cfg;
  suggested.model.R0 = std::max(floor, s.margin * R_h);
  suggested.model.R1 = std::max(floor, s.margin * R_low);
  suggested.model.Rtilde = 4.0 * suggested.model.R1;
  suggested.model.C_star = std::max(floor, s.margin * R_abs);
  std::ostringstream frag;
  frag << "[model]\n"
       << "R0 = " << format_number(suggested.model.R0) << "\n"
       << "R1 = " << format_number(suggested.model.R1) << "\n"
       << "Rtilde = " << format_number(suggested.model.Rtilde) << "\n"
       << "C_star = " << format_number(suggested.model.C_star) << "\n";
  write_text(cfg.out / "radii.ini", frag.str());
}

}  // namespace

void run_experiment(const RunConfig& cfg) {
  validate(cfg);
  const auto& names = subcommands();
  if (std::find(names.begin(), names.end(), cfg.experiment) == names.end())
    throw ConfigError("unknown experiment '" + cfg.experiment + "'");
  const Model model = cfg.build_model();
  write_manifest(cfg);
  std::mt19937_64 rng(cfg.seed);
  if (cfg.experiment == "simulate") run_simulate(cfg, model, rng);
  else if (cfg.experiment == "n-search") run_n_search(cfg, model, rng);
  else if (cfg.experiment == "cone-check") run_cone_check(cfg, model, rng);
  else if (cfg.experiment == "build-manifold") run_build_manifold(cfg, model, rng);
  else if (cfg.experiment == "track") run_track(cfg, model, rng);
  else if (cfg.experiment == "probe-smoothness") run_probe_smoothness(cfg, model, rng);
  else run_calibrate_radii(cfg, model, rng);
}

int exit_status(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    const std::string& k = err->kind();
    if (k == "config" || k == "parse" || k == "version" || k == "format") return 2;
    return 3;
  }
  return 4;
}

void report_error(const fs::path& dir, const std::string& experiment, const std::exception& e, std::ostream& err) {
  json rec;
  rec["status"] = "error";
  rec["experiment"] = experiment;
  const auto* typed = dynamic_cast<const Error*>(&e);
  rec["kind"] = typed ? typed->kind() : "internal";
  rec["message"] = e.what();
  if (const auto* c = dynamic_cast<const ConvergenceError*>(&e)) rec["best_residual"] = number_json(c->best_residual());
  if (const auto* b = dynamic_cast<const IntegrationBlowup*>(&e)) rec["time"] = number_json(b->time());
  rec["exit_status"] = exit_status(e);
  rec["code_version"] = kCodeVersion;
  err << rec.dump() << '\n';
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(dir / "error.json", std::ios::trunc);
  if (out) out << rec.dump(2) << '\n';
}

int run_and_report(const RunConfig& cfg, std::ostream& err) {
  try {
    run_experiment(cfg);
    return 0;
  } catch (const std::exception& e) {
    report_error(cfg.out, cfg.experiment, e, err);
    return exit_status(e);
  }
}

}  // namespace imcgl
