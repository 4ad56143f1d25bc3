#include "hyflow/feeder.hpp"

#include <fstream>

namespace hyflow {

using nlohmann::json;

CVec default_slack_voltage() {
  CVec v0(3);
  v0 << Complex(1.0, 0.0), std::conj(kGamma), kGamma;
  return v0;
}

json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

Complex complex_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2) throw Error("expected a complex number as [re, im], got " + j.dump());
  return {j[0].get<double>(), j[1].get<double>()};
}

json cvec_to_json(const CVec& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(complex_to_json(v[i]));
  return out;
}

CVec cvec_from_json(const json& j) {
  if (!j.is_array()) throw Error("expected an array of [re, im] pairs");
  CVec v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = complex_from_json(j[i]);
  return v;
}

namespace {

CMat square_from_json(const json& j, Index n, const std::string& what) {
  if (!j.is_array() || static_cast<Index>(j.size()) != n * n)
    throw Error(what + ": expected " + std::to_string(n * n) + " row-major [re, im] entries");
  CMat m(n, n);
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c) m(r, c) = complex_from_json(j[static_cast<std::size_t>(r * n + c)]);
  return m;
}

json square_to_json(const CMat& m) {
  json out = json::array();
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) out.push_back(complex_to_json(m(r, c)));
  return out;
}

void accumulate_power(const json& entries, const PhasedNetwork& net, double phase_kva, CVec& target,
                      const std::string& what) {
  for (const json& e : entries) {
    const int bus = e.at("bus").get<int>();
    const PhaseSet phases = PhaseSet::parse(e.at("phases").get<std::string>());
    const auto kw = e.at("kw").get<std::vector<double>>();
    const auto kvar = e.value("kvar", std::vector<double>(kw.size(), 0.0));
    const auto list = phases.phases();
    if (kw.size() != list.size() || kvar.size() != list.size())
      throw Error(what + " at bus " + std::to_string(bus) + ": one kw/kvar value per phase required");
    for (std::size_t k = 0; k < list.size(); ++k) {
      auto col = net.phase_index().column(bus, list[k]);
      if (!col)
        throw Error(what + " at bus " + std::to_string(bus) + " on missing phase " + phase_letter(list[k]));
      target[*col] += Complex(kw[k], kvar[k]) / phase_kva;
    }
  }
}

}  // namespace

Feeder feeder_from_json(const json& doc) {
  try {
    Feeder f;
    f.name = doc.value("name", std::string("feeder"));
    if (doc.contains("base")) {
      f.base.kv = doc["base"].value("kV", 1.0);
      f.base.kva = doc["base"].value("kVA", 3.0);
    } else {
      f.base = {1.0, 3.0};
    }
    if (!(f.base.kva > 0.0)) throw Error("base kVA must be positive");

    std::vector<Bus> buses;
    for (const json& b : doc.at("buses"))
      buses.push_back({b.at("id").get<int>(), PhaseSet::parse(b.at("phases").get<std::string>())});

    std::vector<Line> lines;
    for (const json& l : doc.at("lines")) {
      Line line;
      line.from = l.at("from").get<int>();
      line.to = l.at("to").get<int>();
      line.phases = PhaseSet::parse(l.at("phases").get<std::string>());
      const Index n = line.phases.size();
      const std::string what = "line " + std::to_string(line.from) + "-" + std::to_string(line.to);
      line.series_impedance = square_from_json(l.at("z_series"), n, what + " z_series");
      line.shunt_admittance =
          l.contains("y_shunt") ? square_from_json(l["y_shunt"], n, what + " y_shunt") : CMat::Zero(n, n);
      lines.push_back(std::move(line));
    }
    f.network = PhasedNetwork(std::move(buses), std::move(lines));

    f.v0 = doc.contains("slack") ? cvec_from_json(doc["slack"]) : default_slack_voltage();
    if (f.v0.size() != 3) throw Error("slack voltage must have three phases");

    const Index m = f.network.phase_count();
    f.load = CVec::Zero(m);
    f.der = CVec::Zero(m);
    accumulate_power(doc.value("loads", json::array()), f.network, f.base.phase_kva(), f.load, "load");
    accumulate_power(doc.value("der", json::array()), f.network, f.base.phase_kva(), f.der, "der");
    return f;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed feeder document: ") + e.what());
  }
}

Feeder load_feeder(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open feeder file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
  Feeder f = feeder_from_json(doc);
  return f;
}

json feeder_to_json(const Feeder& f) {
  json doc;
  doc["name"] = f.name;
  doc["base"] = {{"kV", f.base.kv}, {"kVA", f.base.kva}};
  doc["slack"] = cvec_to_json(f.v0);
  doc["buses"] = json::array();
  for (const Bus& b : f.network.buses()) doc["buses"].push_back({{"id", b.id}, {"phases", b.phases.str()}});
  doc["lines"] = json::array();
  for (const Line& l : f.network.lines()) {
    json jl = {{"from", l.from}, {"to", l.to}, {"phases", l.phases.str()}, {"z_series", square_to_json(l.series_impedance)}};
    if (l.shunt_admittance.size() != 0 && l.shunt_admittance.cwiseAbs().maxCoeff() > 0.0)
      jl["y_shunt"] = square_to_json(l.shunt_admittance);
    doc["lines"].push_back(std::move(jl));
  }
  // Per-phase entries, one per column with a nonzero value.
  auto dump_power = [&f](const CVec& v) {
    json out = json::array();
    const PhaseIndex& idx = f.network.phase_index();
    for (Index c = 0; c < v.size(); ++c) {
      if (v[c] == Complex(0.0, 0.0)) continue;
      const PhaseSlot& s = idx.slot(c);
      out.push_back({{"bus", s.bus},
                     {"phases", std::string(1, phase_letter(s.phase))},
                     {"kw", {v[c].real() * f.base.phase_kva()}},
                     {"kvar", {v[c].imag() * f.base.phase_kva()}}});
    }
    return out;
  };
  doc["loads"] = dump_power(f.load);
  doc["der"] = dump_power(f.der);
  return doc;
}

}  // namespace hyflow
