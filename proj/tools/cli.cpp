#include "cli.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "sto/designs.hpp"
#include "sto/errors.hpp"
#include "sto/radial_solver.hpp"
#include "sto/ray_tracer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace sto::cli {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ';') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (...) {
    throw ParameterError("config: field '" + what + "' is not a number: '" + s + "'");
  }
}

// 17 significant digits: round-trip exact doubles, byte-stable output.
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
  fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::ios_base::failure("cannot open for writing: " + tmp.string());
    os << content;
    if (!os.good()) throw std::ios_base::failure("write failed: " + tmp.string());
  }
  fs::rename(tmp, p);
}

// Bounded worker pool over an index range; results land in caller-owned slots,
// assembly stays ordered and single-threaded.
void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex err_mutex;
  int k = std::min(threads, n);
  for (int w = 0; w < k; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          body(i);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lk(err_mutex);
          if (!failed.exchange(true)) first_error = e.what();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failed.load()) throw NumericalError("worker failure: " + first_error);
}

struct Stage {
  std::string name;
  double wall_ms = 0;
  std::string status = "ok";
};

class Manifest {
public:
  Manifest(const ExperimentConfig& cfg) : cfg_(cfg) {}

  template <typename F>
  void timed(const std::string& name, F&& f) {
    auto t0 = std::chrono::steady_clock::now();
    Stage st;
    st.name = name;
    try {
      f();
    } catch (...) {
      st.status = "failed";
      st.wall_ms = ms_since(t0);
      stages_.push_back(st);
      throw;
    }
    st.wall_ms = ms_since(t0);
    stages_.push_back(st);
  }

  void add_output(const std::string& path) { outputs_.push_back(path); }

  std::string write() {
    json j;
    j["version"] = kVersion;
    j["kind"] = cfg_.kind;
    json echo;
    for (const auto& [sec, kv] : cfg_.raw.sections()) {
      json s;
      for (const auto& [k, v] : kv) s[k] = v;
      echo[sec] = s;
    }
    j["config"] = echo;
    j["seed"] = cfg_.seed;
    j["threads"] = cfg_.threads;
    json st = json::array();
    for (const auto& s : stages_)
      st.push_back({{"name", s.name}, {"wall_ms", s.wall_ms}, {"status", s.status}});
    j["stages"] = st;
    j["outputs"] = outputs_;
    for (const auto& [k, v] : extras_) j[k] = v;
    std::string path = cfg_.out_path + ".manifest.json";
    atomic_write(path, j.dump(2) + "\n");
    return path;
  }

  void extra(const std::string& key, const json& v) { extras_[key] = v; }

private:
  static double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
  }
  const ExperimentConfig& cfg_;
  std::vector<Stage> stages_;
  std::vector<std::string> outputs_;
  std::map<std::string, json> extras_;
};

}  // namespace

// --- Config ------------------------------------------------------------------

Config Config::parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::ios_base::failure("cannot open config file: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_text(ss.str(), path);
}

Config Config::parse_text(const std::string& text, const std::string& origin) {
  Config c;
  std::istringstream is(text);
  std::string line, section = "global";
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ParameterError(origin + ":" + std::to_string(lineno) +
                             ": unterminated section header '" + t + "'");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty())
        throw ParameterError(origin + ":" + std::to_string(lineno) + ": empty section name");
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ParameterError(origin + ":" + std::to_string(lineno) +
                           ": expected 'key = value', got '" + t + "'");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ParameterError(origin + ":" + std::to_string(lineno) + ": empty key");
    c.sections_[section][key] = value;
  }
  return c;
}

void Config::set(const std::string& section, const std::string& key,
                 const std::string& value) {
  sections_[section][key] = value;
}

bool Config::has(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return fallback;
  auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  if (!has(section, key)) return fallback;
  return parse_double(get_string(section, key, ""), section + "." + key);
}

int Config::get_int(const std::string& section, const std::string& key, int fallback) const {
  if (!has(section, key)) return fallback;
  double v = parse_double(get_string(section, key, ""), section + "." + key);
  return static_cast<int>(v);
}

bool Config::get_bool(const std::string& section, const std::string& key,
                      bool fallback) const {
  if (!has(section, key)) return fallback;
  std::string v = get_string(section, key, "");
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ParameterError("config: field '" + section + "." + key + "' is not a boolean: '" +
                       v + "'");
}

std::vector<double> Config::get_double_list(const std::string& section,
                                            const std::string& key,
                                            const std::vector<double>& fallback) const {
  if (!has(section, key)) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(get_string(section, key, "")))
    out.push_back(parse_double(item, section + "." + key));
  return out;
}

std::vector<int> Config::get_int_list(const std::string& section, const std::string& key,
                                      const std::vector<int>& fallback) const {
  if (!has(section, key)) return fallback;
  std::vector<int> out;
  for (const auto& item : split_list(get_string(section, key, "")))
    out.push_back(static_cast<int>(parse_double(item, section + "." + key)));
  return out;
}

// --- validation ---------------------------------------------------------------

namespace {

const std::vector<std::string> kKinds = {"design-dump",     "dn-spectrum",
                                         "cloak-converge",  "quantum-converge",
                                         "trapped-scan",    "rays",
                                         "wormhole-rays"};

RadialSource hidden_potential_from(const Config& c) {
  double w0 = c.get_double("params", "W0", 0.0);
  if (w0 == 0.0) return nullptr;
  return [w0](double) { return w0; };
}

RadialMediumProfile profile_from(const ExperimentConfig& cfg) {
  std::string which = cfg.raw.get_string("params", "profile", "homogeneous");
  double R = cfg.raw.get_double("params", "R", 1.2);
  int pairs = cfg.raw.get_int("params", "pairs", 8);
  if (which == "homogeneous") return homogeneous_profile();
  if (which == "ideal") return ideal_cloak_profile();
  if (which == "truncated") return truncated_cloak_profile(R);
  if (which == "layered") return layered_isotropic_profile(R, pairs);
  if (which == "quantum") {
    QuantumCloakSpec qs;
    qs.pairs = pairs;
    qs.R = cfg.raw.get_double("params", "R", 0.0);
    qs.energy = cfg.raw.get_double("params", "energy", 1.0);
    qs.hidden_potential = hidden_potential_from(cfg.raw);
    return quantum_potential_profile(qs);
  }
  throw ParameterError("config: unknown profile '" + which +
                       "' (homogeneous|ideal|truncated|layered|quantum)");
}

void check_range(bool ok, const std::string& what) {
  if (!ok) throw ParameterError("config: " + what);
}

}  // namespace

void validate_config(const ExperimentConfig& cfg) {
  bool known = false;
  for (const auto& k : kKinds) known |= (k == cfg.kind);
  if (!known) throw ParameterError("config: unknown experiment kind '" + cfg.kind + "'");
  check_range(cfg.tol > 0, "tol must be > 0");
  check_range(cfg.threads >= 1, "threads must be >= 1");
  check_range(!cfg.out_path.empty(), "output path must be set");

  const Config& c = cfg.raw;
  int l_max = c.get_int("params", "l_max", 8);
  check_range(l_max >= 0, "l_max must be >= 0");

  if (cfg.kind == "design-dump" || cfg.kind == "dn-spectrum") {
    std::string prof = c.get_string("params", "profile",
                                    cfg.kind == "design-dump" ? "ideal" : "homogeneous");
    if (prof == "truncated" || prof == "layered") {
      double R = c.get_double("params", "R", 1.2);
      check_range(R > 1.0 && R < 2.0, "R must lie in (1,2), got " + fmt(R));
    }
    if (prof == "layered" || prof == "quantum")
      check_range(c.get_int("params", "pairs", 8) >= 1, "pairs must be >= 1");
  }
  if (cfg.kind == "cloak-converge") {
    for (double R : c.get_double_list("params", "R_list", {1.5, 1.25, 1.1, 1.05, 1.01}))
      check_range(R > 1.0 && R < 2.0, "R must lie in (1,2), got " + fmt(R));
  }
  if (cfg.kind == "quantum-converge") {
    for (int n : c.get_int_list("params", "n_list", {4, 8, 16, 32}))
      check_range(n >= 1, "n must be >= 1, got " + std::to_string(n));
  }
  if (cfg.kind == "trapped-scan") {
    check_range(c.get_int("params", "pairs", 16) >= 1, "pairs must be >= 1");
    double lo = c.get_double("params", "e_min", 15.0);
    double hi = c.get_double("params", "e_max", 25.0);
    check_range(hi > lo, "e_max must exceed e_min");
  }
  if (cfg.kind == "rays") {
    check_range(c.get_int("params", "count", 100) >= 0, "count must be >= 0");
    double bmin = c.get_double("params", "impact_min", 0.1);
    double bmax = c.get_double("params", "impact_max", 1.9);
    // impact parameters past 2 are legal (such rays miss the device)
    check_range(bmin > 0 && bmax < 3.0 && bmax >= bmin,
                "impact range must satisfy 0 < min <= max < 3");
  }
  if (cfg.kind == "wormhole-rays") {
    double L = c.get_double("params", "L", 4.0);
    check_range(L > 3.0, "ball separation L must exceed 3, got " + fmt(L));
    std::string warp = c.get_string("params", "warp", "product");
    check_range(warp == "product" || warp == "collimator",
                "warp must be product|collimator");
    if (warp == "collimator") {
      double depth = c.get_double("params", "depth", 0.5);
      check_range(depth > 0 && depth < 1, "collimator depth must lie in (0,1)");
    }
  }
}

std::vector<std::string> validate_report(const ExperimentConfig& cfg) {
  validate_config(cfg);
  std::vector<std::string> lines;
  lines.push_back("ok: kind = " + cfg.kind);
  lines.push_back("ok: out = " + cfg.out_path);
  lines.push_back("ok: threads = " + std::to_string(cfg.threads) + ", tol = " + fmt(cfg.tol) +
                  ", seed = " + std::to_string(cfg.seed));

  // precondition dry-run for quantum experiments: warn near resonances
  if (cfg.kind == "quantum-converge" || cfg.kind == "trapped-scan") {
    double E = cfg.raw.get_double("params", "energy", 1.0);
    RadialSource W = hidden_potential_from(cfg.raw);
    int l_max = cfg.raw.get_int("params", "l_max", 4);
    for (int l = 0; l <= l_max; ++l) {
      for (double eig : neumann_eigenvalues(l, 1.0, W, 6)) {
        if (std::abs(eig - E) < 1e-3)
          lines.push_back("warning: requested energy " + fmt(E) +
                          " is within 1e-3 of the interior Neumann eigenvalue " + fmt(eig) +
                          " (l = " + std::to_string(l) +
                          "): almost-trapped-state resonance");
      }
    }
    for (double eig : dirichlet_eigenvalues_free_ball(2.0, l_max, E + 1.0)) {
      if (std::abs(eig - E) < 1e-3)
        lines.push_back("warning: requested energy " + fmt(E) +
                        " is within 1e-3 of a Dirichlet eigenvalue " + fmt(eig) +
                        " of the free ball");
    }
  }
  return lines;
}

// --- experiments ---------------------------------------------------------------

namespace {

void run_design_dump(const ExperimentConfig& cfg, Manifest& man) {
  std::string design = cfg.raw.get_string("params", "design",
                                          cfg.raw.get_string("params", "profile", "ideal"));
  int grid = cfg.raw.get_int("params", "grid", 50);
  check_range(grid >= 2, "grid must be >= 2");
  std::ostringstream csv;
  if (design == "maxwell") {
    // sample the epsilon = mu tensor along a radius: orthonormal eigenvalues
    csv << "# stokit design-dump maxwell, columns: r, eps_radial, eps_tangential "
           "(dimensionless; identical mu)\n";
    csv << "r,eps_radial,eps_tangential\n";
    for (int i = 0; i < grid; ++i) {
      double r = 2.0 * (i + 1.0) / grid;
      if (std::abs(r - 1.0) < 1e-9) r += 1e-6;
      auto [eps, mu] = maxwell_cloak_tensors({r, 0, 0});
      (void)mu;
      Vec3 n{1, 0, 0}, t{0, 1, 0};
      csv << fmt(r) << ',' << fmt(n.dot(eps.apply(n))) << ',' << fmt(t.dot(eps.apply(t)))
          << '\n';
    }
  } else {
    ExperimentConfig pc = cfg;
    pc.raw.set("params", "profile", design);
    RadialMediumProfile prof = profile_from(pc);
    double energy = cfg.raw.get_double("params", "energy", 1.0);
    csv << "# stokit design-dump " << prof.name()
        << ", columns: r (radius), a (radial conductivity eigenvalue, orthonormal "
           "frame), b (tangential), w (bulk density |g|^(1/2)), g_density (= w^2), "
           "spherical_radial (= r^2 a), potential (Schroedinger V at the dump "
           "energy)\n";
    csv << "r,a,b,w,g_density,spherical_radial,potential\n";
    for (int i = 0; i < grid; ++i) {
      double r = 2.0 * (i + 1.0) / grid;
      if (prof.singular_interface() && std::abs(r - *prof.singular_interface()) < 1e-12)
        r += 1e-9;
      double V = design == "quantum" ? schrodinger_potential_value(prof, energy, r)
                                     : prof.potential(r);
      csv << fmt(r) << ',' << fmt(prof.a(r)) << ',' << fmt(prof.b(r)) << ','
          << fmt(prof.w(r)) << ',' << fmt(prof.w(r) * prof.w(r)) << ','
          << fmt(prof.spherical_radial_component(r)) << ',' << fmt(V) << '\n';
    }
    json iv = json::array();
    for (const auto& i : prof.intervals())
      iv.push_back({{"r_lo", i.r_lo}, {"r_hi", i.r_hi}});
    man.extra("intervals", iv);
  }
  atomic_write(cfg.out_path, csv.str());
  man.add_output(cfg.out_path);
}

void run_dn_spectrum(const ExperimentConfig& cfg, Manifest& man) {
  RadialMediumProfile prof = profile_from(cfg);
  double omega = cfg.raw.has("params", "omega")
                     ? cfg.raw.get_double("params", "omega", 1.0)
                     : std::sqrt(cfg.raw.get_double("params", "energy", 1.0));
  int l_max = cfg.raw.get_int("params", "l_max", 8);
  RadialSolveOptions so;
  so.rtol = cfg.tol;
  DNSpectrum s = dn_spectrum(prof, omega, l_max, so);
  json j;
  j["schema"] = "stokit.dn-spectrum.v1";
  j["profile"] = prof.name();
  j["omega"] = s.omega;
  json entries = json::array();
  for (int l = 0; l <= s.l_max(); ++l)
    entries.push_back({{"l", l}, {"lambda", s.lambda[l]}});
  j["entries"] = entries;
  atomic_write(cfg.out_path, j.dump(2) + "\n");
  man.add_output(cfg.out_path);
}

void run_cloak_converge(const ExperimentConfig& cfg, Manifest& man) {
  double omega = cfg.raw.get_double("params", "omega", 1.0);
  int l_max = cfg.raw.get_int("params", "l_max", 4);
  auto R_list = cfg.raw.get_double_list("params", "R_list", {1.5, 1.25, 1.1, 1.05, 1.01});
  RadialSolveOptions so;
  so.rtol = cfg.tol;

  DNSpectrum ref = dn_spectrum(homogeneous_profile(), omega, l_max, so);
  std::vector<CloakConvergenceRow> rows(R_list.size());
  parallel_for(static_cast<int>(R_list.size()), cfg.threads, [&](int i) {
    CloakConvergenceRow row;
    row.R = R_list[i];
    try {
      DNSpectrum s = dn_spectrum(truncated_cloak_profile(R_list[i]), omega, l_max, so);
      row.abs_err.resize(l_max + 1);
      for (int l = 0; l <= l_max; ++l) {
        row.abs_err[l] = std::abs(s.lambda[l] - ref.lambda[l]);
        row.max_err = std::max(row.max_err, row.abs_err[l]);
      }
    } catch (const ResonanceError&) {
      row.resonant = true;
    }
    rows[i] = row;
  });

  std::ostringstream csv;
  csv << "# stokit cloak-converge, omega = " << fmt(omega)
      << ", columns: R (truncation radius), l (degree), abs_err (|lambda_R - "
         "lambda_free|, dimensionless), resonant (0/1)\n";
  csv << "R,l,abs_err,resonant\n";
  for (const auto& row : rows) {
    for (int l = 0; l <= l_max; ++l)
      csv << fmt(row.R) << ',' << l << ','
          << (row.resonant ? "nan" : fmt(row.abs_err[l])) << ',' << (row.resonant ? 1 : 0)
          << '\n';
  }
  atomic_write(cfg.out_path, csv.str());
  man.add_output(cfg.out_path);
}

void run_quantum_converge(const ExperimentConfig& cfg, Manifest& man) {
  double E = cfg.raw.get_double("params", "energy", 1.0);
  int l_max = cfg.raw.get_int("params", "l_max", 4);
  auto n_list = cfg.raw.get_int_list("params", "n_list", {4, 8, 16, 32});
  RadialSolveOptions so;
  so.rtol = cfg.tol;
  auto rows = quantum_dn_convergence(n_list, E, hidden_potential_from(cfg.raw), l_max, so);
  std::ostringstream csv;
  csv << "# stokit quantum-converge, energy = " << fmt(E)
      << ", columns: n (laminate pairs), R (truncation), l (degree), abs_err "
         "(|lambda_n - lambda_free|, dimensionless)\n";
  csv << "n,R,l,abs_err\n";
  for (const auto& row : rows)
    for (int l = 0; l <= l_max; ++l)
      csv << row.pairs << ',' << fmt(row.R) << ',' << l << ',' << fmt(row.abs_err[l])
          << '\n';
  atomic_write(cfg.out_path, csv.str());
  man.add_output(cfg.out_path);
}

void run_trapped_scan(const ExperimentConfig& cfg, Manifest& man) {
  int pairs = cfg.raw.get_int("params", "pairs", 16);
  int l = cfg.raw.get_int("params", "l", 0);
  double lo = cfg.raw.get_double("params", "e_min", 15.0);
  double hi = cfg.raw.get_double("params", "e_max", 25.0);
  int samples = cfg.raw.get_int("params", "samples", 161);
  RadialSolveOptions so;
  so.rtol = cfg.tol;
  TrappedScanResult res =
      trapped_state_scan(pairs, lo, hi, l, samples, hidden_potential_from(cfg.raw), 0.0, so);
  std::ostringstream csv;
  csv << "# stokit trapped-scan, pairs = " << pairs << ", l = " << l
      << ", columns: energy (dimensionless), ratio (interior/exterior psi^2 weight)\n";
  csv << "energy,ratio\n";
  for (const auto& pt : res.curve) csv << fmt(pt.energy) << ',' << fmt(pt.ratio) << '\n';
  atomic_write(cfg.out_path, csv.str());
  man.add_output(cfg.out_path);
  man.extra("peak_energy", res.peak_energy);
  man.extra("peak_ratio", res.peak_ratio);
}

void run_rays(const ExperimentConfig& cfg, Manifest& man) {
  RayFanSpec fan;
  fan.count = cfg.raw.get_int("params", "count", 100);
  fan.impact_min = cfg.raw.get_double("params", "impact_min", 0.1);
  fan.impact_max = cfg.raw.get_double("params", "impact_max", 1.9);
  fan.seed = cfg.seed;
  bool polylines = cfg.raw.get_bool("params", "polylines", false);
  TraceOptions to;
  to.rtol = cfg.tol;
  std::vector<TraceResult> traces;
  auto rows = travel_time_compare(fan, to, polylines ? &traces : nullptr);
  std::ostringstream csv;
  csv << "# stokit rays (cloak metric vs F1-pushed straight-line oracle), columns: "
         "index, impact (length units), exit_pos_err (relative), exit_dir_err, "
         "length_err (relative), h_drift (relative), guarded (0/1)\n";
  csv << "index,impact,exit_pos_err,exit_dir_err,length_err,h_drift,guarded\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    csv << i << ',' << fmt(r.impact) << ',' << fmt(r.exit_pos_err) << ','
        << fmt(r.exit_dir_err) << ',' << fmt(r.length_err) << ',' << fmt(r.h_drift) << ','
        << (r.guarded ? 1 : 0) << '\n';
  }
  atomic_write(cfg.out_path, csv.str());
  man.add_output(cfg.out_path);

  if (polylines) {
    std::ostringstream pl;
    pl << "# stokit rays polylines, columns: ray, t, x, y, z, px, py, pz "
          "(covector), H, length, event (0/1 refraction)\n";
    pl << "ray,t,x,y,z,px,py,pz,H,length,event\n";
    for (std::size_t i = 0; i < traces.size(); ++i)
      for (const auto& smp : traces[i].samples)
        pl << i << ',' << fmt(smp.t) << ',' << fmt(smp.pos.x) << ',' << fmt(smp.pos.y)
           << ',' << fmt(smp.pos.z) << ',' << fmt(smp.momentum.x) << ','
           << fmt(smp.momentum.y) << ',' << fmt(smp.momentum.z) << ','
           << fmt(smp.hamiltonian) << ',' << fmt(smp.length) << ','
           << (smp.event ? 1 : 0) << '\n';
    std::string path = cfg.out_path + ".polylines.csv";
    atomic_write(path, pl.str());
    man.add_output(path);
  }
}

void run_wormhole_rays(const ExperimentConfig& cfg, Manifest& man) {
  double L = cfg.raw.get_double("params", "L", 4.0);
  std::string warp = cfg.raw.get_string("params", "warp", "product");
  double depth = cfg.raw.get_double("params", "depth", 0.5);
  StoDesign design = warp == "product"
                         ? wormhole_geometry(L)
                         : wormhole_geometry(L, warp_collimator(depth),
                                             warp_collimator_prime(depth));
  int count = cfg.raw.get_int("params", "count", 9);
  double offset_max = cfg.raw.get_double("params", "offset_max", 0.8);
  bool polylines = cfg.raw.get_bool("params", "polylines", false);
  TraceOptions to;
  to.rtol = cfg.tol;
  to.domain_radius = L + 8.0;

  std::vector<TraceResult> results(count);
  parallel_for(count, cfg.threads, [&](int i) {
    double off = count > 1 ? offset_max * i / (count - 1.0) : 0.0;
    RayState s;
    s.x = {off, 0.0, -4.0};
    s.p = {0.0, 0.0, 1.0};
    results[i] = wormhole_trace(design, s, 20.0 + 4.0 * L, to);
  });

  std::ostringstream csv;
  csv << "# stokit wormhole-rays, L = " << fmt(L) << ", warp = " << warp
      << ", columns: index, offset (length units), transits, termination, exit "
         "position (x,y,z), clairaut_drift (relative), h_drift (relative)\n";
  csv << "index,offset,transits,termination,exit_x,exit_y,exit_z,clairaut_drift,h_drift\n";
  const char* term_names[] = {"exited_domain", "tangency_guard", "max_steps",
                              "time_budget", "entered_piece"};
  for (int i = 0; i < count; ++i) {
    const auto& tr = results[i];
    double off = count > 1 ? offset_max * i / (count - 1.0) : 0.0;
    const auto& fin = tr.final_sample();
    csv << i << ',' << fmt(off) << ',' << tr.handle_transits << ','
        << term_names[static_cast<int>(tr.termination)] << ',' << fmt(fin.pos.x) << ','
        << fmt(fin.pos.y) << ',' << fmt(fin.pos.z) << ','
        << fmt(handle_clairaut_drift(tr)) << ',' << fmt(tr.hamiltonian_drift) << '\n';
  }
  atomic_write(cfg.out_path, csv.str());
  man.add_output(cfg.out_path);

  if (polylines) {
    std::ostringstream pl;
    pl << "# stokit wormhole-rays polylines, columns: ray, piece (0 ambient / 1 "
          "handle), t, x, y, z (piece 1: unit-sphere point), zh (handle "
          "coordinate), px, py, pz (piece 0 covector / piece 1 s_dot), H, length, "
          "event (0/1)\n";
    pl << "ray,piece,t,x,y,z,zh,px,py,pz,H,length,event\n";
    for (int i = 0; i < count; ++i)
      for (const auto& smp : results[i].samples)
        pl << i << ',' << smp.piece << ',' << fmt(smp.t) << ',' << fmt(smp.pos.x) << ','
           << fmt(smp.pos.y) << ',' << fmt(smp.pos.z) << ',' << fmt(smp.aux) << ','
           << fmt(smp.momentum.x) << ',' << fmt(smp.momentum.y) << ','
           << fmt(smp.momentum.z) << ',' << fmt(smp.hamiltonian) << ','
           << fmt(smp.length) << ',' << (smp.event ? 1 : 0) << '\n';
    std::string path = cfg.out_path + ".polylines.csv";
    atomic_write(path, pl.str());
    man.add_output(path);
  }
}

}  // namespace

std::vector<std::string> run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  Manifest man(cfg);
  if (cfg.kind == "design-dump")
    man.timed("design-dump", [&] { run_design_dump(cfg, man); });
  else if (cfg.kind == "dn-spectrum")
    man.timed("dn-spectrum", [&] { run_dn_spectrum(cfg, man); });
  else if (cfg.kind == "cloak-converge")
    man.timed("cloak-converge", [&] { run_cloak_converge(cfg, man); });
  else if (cfg.kind == "quantum-converge")
    man.timed("quantum-converge", [&] { run_quantum_converge(cfg, man); });
  else if (cfg.kind == "trapped-scan")
    man.timed("trapped-scan", [&] { run_trapped_scan(cfg, man); });
  else if (cfg.kind == "rays")
    man.timed("rays", [&] { run_rays(cfg, man); });
  else if (cfg.kind == "wormhole-rays")
    man.timed("wormhole-rays", [&] { run_wormhole_rays(cfg, man); });
  else
    throw ParameterError("config: unknown experiment kind '" + cfg.kind + "'");
  std::string mpath = man.write();
  return {cfg.out_path, mpath};
}

int exit_code_for_current_exception() {
  try {
    throw;
  } catch (const ParameterError&) {
    return 2;
  } catch (const PreconditionError&) {
    return 2;
  } catch (const ResonanceError&) {
    return 3;
  } catch (const std::ios_base::failure&) {
    return 5;
  } catch (const std::filesystem::filesystem_error&) {
    return 5;
  } catch (const std::exception&) {
    return 4;
  }
}

}  // namespace sto::cli
