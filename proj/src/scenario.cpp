#include "hyflow/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

namespace hyflow {

using nlohmann::json;

namespace {

enum Domain : std::uint64_t { kDraw = 1, kBadSelect = 2, kBadSample = 3, kView = 4, kSynthetic = 5 };

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error("scenario config: " + what);
}

// Runs fn(i) for i in [0, n) on up to `threads` workers with a fixed stride assignment.
template <typename Fn>
void parallel_for(Index n, int threads, Fn&& fn) {
  const Index workers =
      std::clamp<Index>(threads > 0 ? threads : static_cast<Index>(std::thread::hardware_concurrency()), 1,
                        std::max<Index>(n, 1));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  auto run = [&](Index first) {
    try {
      for (Index i = first; i < n; i += workers) fn(i);
    } catch (...) {
      errors[static_cast<std::size_t>(first)] = std::current_exception();
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::jthread> pool;
    for (Index k = 0; k < workers; ++k) pool.emplace_back(run, k);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<int> non_slack_buses(const PhasedNetwork& net) {
  std::vector<int> ids;
  for (const Bus& b : net.buses())
    if (b.id != 0) ids.push_back(b.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<int> pick_buses(std::mt19937_64& rng, std::vector<int> ids, Index count) {
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(static_cast<std::size_t>(count));
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t domain, std::uint64_t counter, std::uint64_t sub) {
  std::uint64_t h = splitmix(seed);
  h = splitmix(h ^ domain);
  h = splitmix(h ^ counter);
  h = splitmix(h ^ sub);
  return std::mt19937_64(h);
}

double truncated_gaussian(std::mt19937_64& rng, double bound) {
  if (!(bound > 0.0)) return 0.0;
  std::normal_distribution<double> normal(0.0, bound / 3.0);
  for (;;) {
    const double v = normal(rng);
    if (std::abs(v) <= bound) return v;
  }
}

void ScenarioConfig::validate() const {
  auto fraction = [](double v) { return v >= 0.0 && v <= 1.0; };
  require(n_train > 0 && n_test > 0, "n_train and n_test must be positive");
  require(fraction(load_variation), "load_variation must lie in [0, 1]");
  require(fraction(der_variation), "der_variation must lie in [0, 1]");
  require(fraction(noise_max), "noise_max must lie in [0, 1]");
  require(fraction(bad_sample_fraction), "bad_sample_fraction must lie in [0, 1]");
  require(fraction(max_failure_rate), "max_failure_rate must lie in [0, 1]");
  require(n_bad_nodes > 0, "n_bad_nodes must be positive");
  require(bad_voltage_high > 1.0, "bad_voltage_high must exceed 1");
  require(bad_voltage_low >= 0.0 && bad_voltage_low < 1.0, "bad_voltage_low must lie in [0, 1)");
  require(bad_power_factor >= 0.0, "bad_power_factor must be nonnegative");
}

json config_to_json(const ScenarioConfig& c) {
  return {{"seed", c.seed},
          {"n_train", c.n_train},
          {"n_test", c.n_test},
          {"load_variation", c.load_variation},
          {"der_variation", c.der_variation},
          {"noise_max", c.noise_max},
          {"noise_on_test", c.noise_on_test},
          {"bad_sample_fraction", c.bad_sample_fraction},
          {"n_bad_nodes", c.n_bad_nodes},
          {"bad_voltage_low", c.bad_voltage_low},
          {"bad_voltage_high", c.bad_voltage_high},
          {"bad_power_factor", c.bad_power_factor},
          {"max_failure_rate", c.max_failure_rate},
          {"solver_tolerance", c.solver.tolerance},
          {"solver_max_iterations", c.solver.max_iterations}};
}

ScenarioConfig config_from_json(const json& doc) {
  ScenarioConfig c;
  try {
    c.seed = doc.value("seed", c.seed);
    c.n_train = doc.value("n_train", c.n_train);
    c.n_test = doc.value("n_test", c.n_test);
    c.load_variation = doc.value("load_variation", c.load_variation);
    c.der_variation = doc.value("der_variation", c.der_variation);
    c.noise_max = doc.value("noise_max", c.noise_max);
    c.noise_on_test = doc.value("noise_on_test", c.noise_on_test);
    c.bad_sample_fraction = doc.value("bad_sample_fraction", c.bad_sample_fraction);
    c.n_bad_nodes = doc.value("n_bad_nodes", c.n_bad_nodes);
    c.bad_voltage_low = doc.value("bad_voltage_low", c.bad_voltage_low);
    c.bad_voltage_high = doc.value("bad_voltage_high", c.bad_voltage_high);
    c.bad_power_factor = doc.value("bad_power_factor", c.bad_power_factor);
    c.max_failure_rate = doc.value("max_failure_rate", c.max_failure_rate);
    c.solver.tolerance = doc.value("solver_tolerance", c.solver.tolerance);
    c.solver.max_iterations = doc.value("solver_max_iterations", c.solver.max_iterations);
    c.threads = doc.value("threads", c.threads);
  } catch (const json::exception& e) {
    throw Error(std::string("malformed scenario config: ") + e.what());
  }
  return c;
}

TrainingSet Dataset::training_set(TargetKind target) const {
  TrainingSet ts;
  if (samples.empty()) return ts;
  const Index f = samples.front().y.size();
  const Index t = samples.front().x.size();
  ts.features.resize(size(), f);
  ts.targets.resize(size(), t);
  for (Index k = 0; k < size(); ++k) {
    const Sample& s = samples[static_cast<std::size_t>(k)];
    if (s.y.size() != f || s.x.size() != t) throw Error("dataset: samples have inconsistent lengths");
    ts.features.row(k) = s.y.transpose();
    ts.targets.row(k) = (target == TargetKind::error ? s.e : s.x).transpose();
    ts.flags.push_back(s.flag);
  }
  return ts;
}

ScenarioSet generate_scenarios(const Feeder& feeder, const ScenarioConfig& cfg) {
  cfg.validate();
  const ValidationReport report = validate_network(feeder.network);
  if (!report.ok()) throw Error("scenario: feeder is invalid: " + report.violations.front().message);

  const AdmittanceSystem sys = build_admittance(feeder.network);
  const NonlinearSolver solver(sys);
  const RotationVector t = rotation_vector(feeder.network);
  const Index m = sys.size();
  const Index total = cfg.n_train + cfg.n_test;
  constexpr int kMaxAttempts = 64;

  std::vector<Sample> samples(static_cast<std::size_t>(total));
  std::vector<Index> redraws(static_cast<std::size_t>(total), 0);

  parallel_for(total, cfg.threads, [&](Index k) {
    const bool training = k < cfg.n_train;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      auto rng = make_stream(cfg.seed, kDraw, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(attempt));
      std::uniform_real_distribution<double> load_mult(1.0 - cfg.load_variation, 1.0 + cfg.load_variation);
      std::uniform_real_distribution<double> der_mult(1.0 - cfg.der_variation, 1.0 + cfg.der_variation);
      OperatingPoint op{feeder.v0, CVec(m)};
      for (Index c = 0; c < m; ++c) {
        const double lm = load_mult(rng);
        const double dm = der_mult(rng);
        op.s[c] = feeder.der[c] * dm - feeder.load[c] * lm;
      }
      // Noise draws come after the operating point so noiseless configs share the same ops.
      CVec measured = op.s;
      const bool noisy = (training || cfg.noise_on_test) && cfg.noise_max > 0.0;
      if (noisy) {
        for (Index c = 0; c < m; ++c) {
          const double ep = truncated_gaussian(rng, cfg.noise_max);
          const double eq = truncated_gaussian(rng, cfg.noise_max);
          measured[c] = Complex(op.s[c].real() * (1.0 + ep), op.s[c].imag() * (1.0 + eq));
        }
      }
      try {
        const PFSolution exact = solver.solve(op, cfg.solver);
        const PFSolution approx = solve_taylor(assemble_linear(sys, op, t));
        Sample& s = samples[static_cast<std::size_t>(k)];
        s.index = k;
        s.x = to_rect(exact.v);
        s.e = s.x - to_rect(approx.v);
        s.y = make_features({op.v0, measured});
        s.op = std::move(op);
        s.flag = noisy ? SampleFlag::noisy : SampleFlag::clean;
        return;
      } catch (const Error&) {
        ++redraws[static_cast<std::size_t>(k)];
      }
    }
    throw Error("scenario: sample " + std::to_string(k) + " failed to solve in " + std::to_string(kMaxAttempts) +
                " draws");
  });

  ScenarioSet out;
  out.redraws = std::accumulate(redraws.begin(), redraws.end(), Index{0});
  if (static_cast<double>(out.redraws) > cfg.max_failure_rate * static_cast<double>(total))
    throw Error("scenario: nonlinear solve failed on " + std::to_string(out.redraws) + " of " +
                std::to_string(total + out.redraws) + " draws");

  const std::string fp = sys.phase_index.fingerprint();
  out.train = {cfg.seed, "train", fp, {}};
  out.test = {cfg.seed, "test", fp, {}};
  out.train.samples.assign(std::make_move_iterator(samples.begin()),
                           std::make_move_iterator(samples.begin() + cfg.n_train));
  out.test.samples.assign(std::make_move_iterator(samples.begin() + cfg.n_train),
                          std::make_move_iterator(samples.end()));
  return out;
}

Dataset inject_bad_data(const Dataset& ds, const PhasedNetwork& net, const ScenarioConfig& cfg) {
  const std::vector<int> buses = non_slack_buses(net);
  if (cfg.n_bad_nodes > static_cast<Index>(buses.size()))
    throw Error("bad data: n_bad_nodes " + std::to_string(cfg.n_bad_nodes) + " exceeds the " +
                std::to_string(buses.size()) + " non-slack buses");
  Dataset out = ds;
  const auto count = static_cast<Index>(std::floor(cfg.bad_sample_fraction * static_cast<double>(ds.size())));
  if (count == 0) return out;

  const PhaseIndex& index = net.phase_index();
  const Index m = index.size();
  std::vector<Index> order(static_cast<std::size_t>(ds.size()));
  std::iota(order.begin(), order.end(), Index{0});
  auto select = make_stream(cfg.seed, kBadSelect, 0);
  std::shuffle(order.begin(), order.end(), select);
  order.resize(static_cast<std::size_t>(count));
  std::sort(order.begin(), order.end());

  const double power_error = cfg.bad_power_factor * cfg.noise_max;
  for (Index k : order) {
    Sample& s = out.samples[static_cast<std::size_t>(k)];
    if (s.x.size() != 2 * m || s.y.size() != feature_length(m))
      throw Error("bad data: sample " + std::to_string(s.index) + " does not match the network");
    auto rng = make_stream(cfg.seed, kBadSample, static_cast<std::uint64_t>(s.index));
    std::bernoulli_distribution coin(0.5);
    std::uniform_real_distribution<double> low(cfg.bad_voltage_low, cfg.bad_voltage_low + 0.05);
    std::uniform_real_distribution<double> high(cfg.bad_voltage_high, cfg.bad_voltage_high + 0.5);
    const RVec x_before = s.x;
    for (int bus : pick_buses(rng, buses, cfg.n_bad_nodes)) {
      const bool go_low = coin(rng);
      for (Index c : index.columns_of(bus)) {
        const Complex v(s.x[c], s.x[m + c]);
        const double magnitude = go_low ? low(rng) : high(rng);
        const Complex bad = std::polar(magnitude, std::arg(v));
        s.x[c] = bad.real();
        s.x[m + c] = bad.imag();
        s.y[6 + c] += power_error * s.op.s[c].real();
        s.y[6 + m + c] += power_error * s.op.s[c].imag();
      }
    }
    s.e += s.x - x_before;
    s.flag = SampleFlag::bad;
  }
  return out;
}

std::vector<OperatingPoint> corrupted_measurements(const Dataset& ds, const PhasedNetwork& net,
                                                   const ScenarioConfig& cfg) {
  const std::vector<int> buses = non_slack_buses(net);
  if (cfg.n_bad_nodes > static_cast<Index>(buses.size()))
    throw Error("bad data: n_bad_nodes exceeds the non-slack bus count");
  const PhaseIndex& index = net.phase_index();
  const double power_error = cfg.bad_power_factor * cfg.noise_max;
  std::vector<OperatingPoint> out;
  out.reserve(ds.samples.size());
  for (const Sample& s : ds.samples) {
    auto rng = make_stream(cfg.seed, kView, static_cast<std::uint64_t>(s.index));
    OperatingPoint op = s.op;
    for (Index c = 0; c < op.s.size(); ++c) {
      const double ep = truncated_gaussian(rng, cfg.noise_max);
      const double eq = truncated_gaussian(rng, cfg.noise_max);
      op.s[c] = Complex(s.op.s[c].real() * (1.0 + ep), s.op.s[c].imag() * (1.0 + eq));
    }
    for (int bus : pick_buses(rng, buses, cfg.n_bad_nodes))
      for (Index c : index.columns_of(bus)) op.s[c] += power_error * s.op.s[c];
    out.push_back(std::move(op));
  }
  return out;
}

namespace {

json rvec_json(const RVec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

RVec rvec_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const RVec>(values.data(), static_cast<Index>(values.size()));
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& ds) {
  const Index m = ds.samples.empty() ? 0 : ds.samples.front().op.s.size();
  json header = {{"format", "hyflow-dataset"},
                 {"version", 1},
                 {"seed", ds.seed},
                 {"split", ds.split},
                 {"fingerprint", ds.fingerprint},
                 {"phases", m},
                 {"count", ds.size()}};
  out << header.dump() << '\n';
  for (const Sample& s : ds.samples) {
    json line = {{"index", s.index},
                 {"flag", to_string(s.flag)},
                 {"v0", cvec_to_json(s.op.v0)},
                 {"s", cvec_to_json(s.op.s)},
                 {"features", rvec_json(s.y)},
                 {"x", rvec_json(s.x)},
                 {"targets", rvec_json(s.e)}};
    out << line.dump() << '\n';
  }
}

void write_dataset(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write dataset " + path.string());
  write_dataset(out, ds);
}

Dataset read_dataset(std::istream& in) {
  Dataset ds;
  std::string text;
  if (!std::getline(in, text)) throw Error("dataset: missing header line");
  try {
    const json header = json::parse(text);
    if (header.value("format", std::string()) != "hyflow-dataset") throw Error("dataset: unrecognized header");
    ds.seed = header.value("seed", std::uint64_t{0});
    ds.split = header.value("split", std::string());
    ds.fingerprint = header.value("fingerprint", std::string());
    while (std::getline(in, text)) {
      if (text.empty()) continue;
      const json line = json::parse(text);
      Sample s;
      s.index = line.at("index").get<Index>();
      s.flag = flag_from_string(line.at("flag").get<std::string>());
      s.op.v0 = cvec_from_json(line.at("v0"));
      s.op.s = cvec_from_json(line.at("s"));
      s.y = rvec_from(line.at("features"));
      s.x = rvec_from(line.at("x"));
      s.e = rvec_from(line.at("targets"));
      ds.samples.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw Error(std::string("dataset: ") + e.what());
  }
  return ds;
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset " + path.string());
  return read_dataset(in);
}

Feeder synthetic_feeder(std::uint64_t seed, const SyntheticFeederOptions& opts) {
  if (opts.buses < 2) throw Error("synthetic feeder needs at least two buses");
  auto rng = make_stream(seed, kSynthetic, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Feeder f;
  f.name = "synthetic-" + std::to_string(seed);
  f.base = {4.16, 5000.0};
  f.v0 = default_slack_voltage();
  const double z_base = f.base.kv * f.base.kv * 1000.0 / f.base.kva;  // ohm

  // Overhead configuration in ohm/mile and microsiemens/mile.
  CMat z_mile(3, 3);
  z_mile << Complex(0.3465, 1.0179), Complex(0.1560, 0.5017), Complex(0.1580, 0.4236),
      Complex(0.1560, 0.5017), Complex(0.3375, 1.0478), Complex(0.1535, 0.3849),
      Complex(0.1580, 0.4236), Complex(0.1535, 0.3849), Complex(0.3414, 1.0348);
  RMat b_mile(3, 3);
  b_mile << 6.2998, -1.9958, -1.2595, -1.9958, 5.9597, -0.7417, -1.2595, -0.7417, 5.6386;

  std::vector<Bus> buses{{0, PhaseSet::all()}};
  std::vector<Line> lines;
  for (Index k = 1; k < opts.buses; ++k) {
    // Attach to one of the recent buses so the feeder grows laterals of some depth.
    const Index window = std::min<Index>(k, 8);
    const Index parent = k - 1 - static_cast<Index>(unit(rng) * static_cast<double>(window));
    const PhaseSet pp = buses[static_cast<std::size_t>(parent)].phases;
    const auto avail = pp.phases();
    const double draw = unit(rng);
    PhaseSet ph;
    if (avail.size() == 3 && draw < opts.three_phase_fraction) {
      ph = pp;
    } else if (avail.size() >= 2 && draw < opts.three_phase_fraction + opts.two_phase_fraction) {
      const auto drop = static_cast<std::size_t>(unit(rng) * static_cast<double>(avail.size())) % avail.size();
      std::uint8_t mask = 0;
      for (std::size_t i = 0; i < avail.size(); ++i)
        if (i != drop) mask |= static_cast<std::uint8_t>(1u << static_cast<int>(avail[i]));
      ph = avail.size() == 2 ? pp : PhaseSet(mask);
    } else {
      const auto pick = static_cast<std::size_t>(unit(rng) * static_cast<double>(avail.size())) % avail.size();
      ph = PhaseSet(static_cast<std::uint8_t>(1u << static_cast<int>(avail[pick])));
    }
    buses.push_back({static_cast<int>(k), ph});

    const double miles = (150.0 + 650.0 * unit(rng)) / 5280.0;
    const auto list = ph.phases();
    const Index n = static_cast<Index>(list.size());
    Line line{static_cast<int>(parent), static_cast<int>(k), ph, CMat(n, n), CMat::Zero(n, n)};
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) {
        const auto pi = static_cast<Index>(list[static_cast<std::size_t>(i)]);
        const auto pj = static_cast<Index>(list[static_cast<std::size_t>(j)]);
        line.series_impedance(i, j) = z_mile(pi, pj) * miles / z_base;
        if (opts.shunts) line.shunt_admittance(i, j) = Complex(0.0, b_mile(pi, pj) * 1e-6 * miles * z_base);
      }
    lines.push_back(std::move(line));
  }
  f.network = PhasedNetwork(std::move(buses), std::move(lines));

  const Index m = f.network.phase_count();
  f.load = CVec::Zero(m);
  f.der = CVec::Zero(m);
  const double pk = f.base.phase_kva();
  for (Index c = 0; c < m; ++c) {
    if (unit(rng) < 0.85) {
      const double kw = opts.load_kw * (0.5 + unit(rng));
      f.load[c] = Complex(kw, 0.45 * kw) / pk;
    }
  }
  for (Index c = 0; c < m; ++c)
    if (unit(rng) < opts.der_fraction) f.der[c] = Complex(opts.der_kw * (0.5 + unit(rng)), 0.0) / pk;
  return f;
}

}  // namespace hyflow
