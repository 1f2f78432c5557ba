#include "sewerflow/scenario_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace sewerflow {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& field, const std::string& what) {
  throw ScenarioError(ScenarioError::Kind::Parse, "scenario field '" + field + "': " + what);
}

const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) parse_fail(path + "." + key, "missing");
  return obj.at(key);
}

double get_number(const json& obj, const char* key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_number()) parse_fail(path + "." + key, "expected a number");
  return v.get<double>();
}

double get_number_or(const json& obj, const char* key, double fallback,
                     const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  return get_number(obj, key, path);
}

std::vector<double> get_vector(const json& v, const std::string& path) {
  if (!v.is_array()) parse_fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (const json& e : v) {
    if (!e.is_number()) parse_fail(path, "expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

/// Rate fields accept `<key>_per_day` (converted) or `<key>_per_min`.
double get_rate(const json& obj, const std::string& key, const std::string& path,
                std::optional<double> fallback = std::nullopt) {
  const std::string per_day = key + "_per_day";
  const std::string per_min = key + "_per_min";
  if (obj.contains(per_min)) return get_number(obj, per_min.c_str(), path);
  if (obj.contains(per_day)) return get_number(obj, per_day.c_str(), path) / kMinutesPerDay;
  if (fallback) return *fallback;
  parse_fail(path + "." + per_day, "missing");
}

TankKind parse_tank_kind(const std::string& s, const std::string& path) {
  if (s == "plant") return TankKind::Plant;
  if (s == "real") return TankKind::Real;
  if (s == "virtual") return TankKind::Virtual;
  if (s == "diversion") return TankKind::DiversionNode;
  parse_fail(path, "unknown tank kind '" + s + "'");
}

PipeControl parse_control(const std::string& s, const std::string& path) {
  if (s == "uncontrolled") return PipeControl::Uncontrolled;
  if (s == "pump_or_gate") return PipeControl::PumpOrGate;
  if (s == "volume_limited") return PipeControl::VolumeLimited;
  if (s == "diversion_branch") return PipeControl::DiversionBranch;
  parse_fail(path, "unknown pipe control '" + s + "'");
}

std::size_t species_index(const std::vector<std::string>& species, const std::string& name,
                          const std::string& path) {
  auto it = std::find(species.begin(), species.end(), name);
  if (it == species.end()) parse_fail(path, "unknown species '" + name + "'");
  return static_cast<std::size_t>(it - species.begin());
}

NetworkModel parse_network(const json& doc, double delta) {
  const json& net = require(doc, "network", "");
  std::vector<Tank> tanks;
  const json& jt = require(net, "tanks", "network");
  if (!jt.is_array()) parse_fail("network.tanks", "expected an array");
  for (std::size_t k = 0; k < jt.size(); ++k) {
    const json& e = jt[k];
    const std::string path = "network.tanks[" + std::to_string(k) + "]";
    Tank t;
    t.id = require(e, "id", path).get<std::string>();
    t.kind = parse_tank_kind(require(e, "kind", path).get<std::string>(), path + ".kind");
    t.v_max = get_number_or(e, "v_max", 0.0, path);
    t.v_bar = get_number_or(e, "v_bar", 0.0, path);
    t.q_out_min = get_number_or(e, "q_out_min", 0.0, path);
    t.q_out_max = get_number_or(e, "q_out_max", 0.0, path);
    t.beta = get_number_or(e, "beta", 0.0, path);
    t.has_external_inflow = e.value("external_inflow", false);
    tanks.push_back(std::move(t));
  }

  std::map<std::string, std::size_t> ids;
  for (std::size_t i = 0; i < tanks.size(); ++i) ids[tanks[i].id] = i;
  auto lookup = [&](const std::string& id, const std::string& path) {
    auto it = ids.find(id);
    if (it == ids.end()) parse_fail(path, "unknown tank '" + id + "'");
    return it->second;
  };

  std::vector<Pipe> pipes;
  const json& jp = require(net, "pipes", "network");
  if (!jp.is_array()) parse_fail("network.pipes", "expected an array");
  for (std::size_t k = 0; k < jp.size(); ++k) {
    const json& e = jp[k];
    const std::string path = "network.pipes[" + std::to_string(k) + "]";
    Pipe p;
    const std::string from = require(e, "from", path).get<std::string>();
    const std::string to = require(e, "to", path).get<std::string>();
    p.from = lookup(from, path + ".from");
    p.to = lookup(to, path + ".to");
    p.label = e.value("label", from + "->" + to);
    p.q_max = get_number(e, "q_max", path);
    p.q_min = get_number_or(e, "q_min", 0.0, path);
    p.control = parse_control(e.value("control", std::string("uncontrolled")), path + ".control");
    if (e.contains("delay_steps")) {
      p.delay_steps = static_cast<int>(get_number(e, "delay_steps", path));
    } else {
      // Nearest whole number of trajectory steps.
      p.delay_steps = static_cast<int>(std::lround(get_number_or(e, "delay_min", 0.0, path) / delta));
    }
    pipes.push_back(std::move(p));
  }
  try {
    return NetworkModel(std::move(tanks), std::move(pipes));
  } catch (const std::invalid_argument& e) {
    parse_fail("network", e.what());
  }
}

PlantBiology parse_biology(const json& e, const std::vector<std::string>& species,
                           const std::string& path) {
  if (e.contains("preset")) {
    const std::string preset = e.at("preset").get<std::string>();
    for (int k = 0; k < 3; ++k)
      if (preset == "case_study_plant_" + std::to_string(k + 1)) {
        PlantBiology bio = case_study_biology(k);
        if (bio.species != species)
          parse_fail(path + ".preset", "preset species differ from the scenario species");
        return bio;
      }
    parse_fail(path + ".preset", "unknown preset '" + preset + "'");
  }
  PlantBiology bio;
  bio.species = species;
  bio.biomass_index = species_index(species, require(e, "biomass", path).get<std::string>(),
                                    path + ".biomass");
  const json& jk = require(e, "kappa", path);
  if (!jk.is_array()) parse_fail(path + ".kappa", "expected rows");
  for (std::size_t r = 0; r < jk.size(); ++r)
    bio.kappa.push_back(get_vector(jk[r], path + ".kappa[" + std::to_string(r) + "]"));
  const json& jl = require(e, "laws", path);
  for (std::size_t k = 0; k < jl.size(); ++k) {
    const json& law = jl[k];
    const std::string lp = path + ".laws[" + std::to_string(k) + "]";
    const std::string type = require(law, "type", lp).get<std::string>();
    const double mu = get_rate(law, "mu", lp);
    if (type == "decay") {
      bio.laws.push_back(KineticLaw::decay(
          mu, species_index(species, require(law, "biomass", lp).get<std::string>(), lp)));
      continue;
    }
    const std::size_t s = species_index(species, require(law, "substrate", lp).get<std::string>(), lp);
    const std::size_t x = species_index(species, require(law, "biomass", lp).get<std::string>(), lp);
    if (type == "contois") {
      bio.laws.push_back(KineticLaw::contois(mu, get_number(law, "k", lp), s, x));
    } else if (type == "monod") {
      bio.laws.push_back(KineticLaw::monod(mu, get_number(law, "k", lp),
                                           get_number(law, "x_bar", lp), s, x));
    } else {
      parse_fail(lp + ".type", "unknown kinetic law '" + type + "'");
    }
  }
  bio.death_rate = get_rate(e, "death_rate", path, 0.0);
  bio.effluent_biomass_factor = get_number_or(e, "effluent_biomass_factor", 1.0, path);
  if (!e.value("decay_included", false)) bio.append_decay_column();
  return bio;
}

std::vector<double> species_vector(const json& v, std::size_t m, const std::string& path) {
  std::vector<double> out = get_vector(v, path);
  if (out.size() != m)
    parse_fail(path, "expected " + std::to_string(m) + " species values");
  return out;
}

InitialState parse_initial(const json& doc, const NetworkModel& net, std::size_t m) {
  const json& e = require(doc, "initial_state", "");
  InitialState init;
  const std::size_t nt = net.tank_count();
  init.volume.assign(nt, 0.0);
  init.conc.assign(nt, std::vector<double>(m, 0.0));
  init.pipe_setpoint.assign(net.pipe_count(), 0.0);
  init.plant_outflow.assign(net.plants().size(), 0.0);

  if (e.contains("volumes"))
    for (const auto& [id, v] : e.at("volumes").items()) {
      auto idx = net.find_tank(id);
      if (!idx) parse_fail("initial_state.volumes." + id, "unknown tank");
      init.volume[*idx] = v.get<double>();
    }
  if (e.contains("concentrations")) {
    const json& c = e.at("concentrations");
    if (c.contains("default")) {
      const auto def = species_vector(c.at("default"), m, "initial_state.concentrations.default");
      for (auto& row : init.conc) row = def;
    }
    for (const auto& [id, v] : c.items()) {
      if (id == "default") continue;
      auto idx = net.find_tank(id);
      if (!idx) parse_fail("initial_state.concentrations." + id, "unknown tank");
      init.conc[*idx] = species_vector(v, m, "initial_state.concentrations." + id);
    }
  }
  if (e.contains("setpoints"))
    for (const auto& [label, v] : e.at("setpoints").items()) {
      bool found = false;
      for (std::size_t p = 0; p < net.pipe_count(); ++p)
        if (net.pipe(p).label == label) {
          init.pipe_setpoint[p] = v.get<double>();
          found = true;
        }
      if (!found) parse_fail("initial_state.setpoints." + label, "unknown pipe label");
    }
  if (e.contains("plant_outflow"))
    for (const auto& [id, v] : e.at("plant_outflow").items()) {
      auto idx = net.find_tank(id);
      if (!idx || !net.tank(*idx).is_plant())
        parse_fail("initial_state.plant_outflow." + id, "not a plant");
      init.plant_outflow[net.plant_slot(*idx)] = v.get<double>();
    }
  return init;
}

std::vector<double> weight_vector(const json& w, const char* key, std::size_t n, double fallback) {
  if (!w.contains(key)) return std::vector<double>(n, fallback);
  const json& v = w.at(key);
  if (v.is_number()) return std::vector<double>(n, v.get<double>());
  auto out = get_vector(v, std::string("weights.") + key);
  if (out.size() != n)
    parse_fail(std::string("weights.") + key, "expected " + std::to_string(n) + " entries");
  return out;
}

}  // namespace

std::vector<InfluentSample> read_influent_csv(const std::filesystem::path& path,
                                              const std::vector<std::string>& species) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(ScenarioError::Kind::Parse, "cannot open influent file " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto a = cell.find_first_not_of(" \t\r");
      const auto b = cell.find_last_not_of(" \t\r");
      cells.push_back(a == std::string::npos ? std::string() : cell.substr(a, b - a + 1));
    }
    return cells;
  };

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.find_first_not_of(" \t\r") != std::string::npos) {
      header = split(line);
      break;
    }
  }
  std::vector<InfluentSample> out;
  if (header.empty()) return out;
  const std::string where = path.filename().string();
  if (header.size() < 3 || header[0] != "t_min" || header[1] != "inlet_id" || header[2] != "flow")
    throw ScenarioError(ScenarioError::Kind::Parse,
                        where + ":" + std::to_string(line_no) +
                            ": header must start with t_min,inlet_id,flow");
  std::vector<std::size_t> column_species;
  for (std::size_t c = 3; c < header.size(); ++c) {
    const std::string& h = header[c];
    if (h.rfind("c_", 0) != 0)
      throw ScenarioError(ScenarioError::Kind::Parse,
                          where + ":" + std::to_string(line_no) + ": column '" + h +
                              "' is not a c_<species> column");
    auto it = std::find(species.begin(), species.end(), h.substr(2));
    if (it == species.end())
      throw ScenarioError(ScenarioError::Kind::Parse,
                          where + ":" + std::to_string(line_no) + ": unknown species column '" +
                              h + "'");
    column_species.push_back(static_cast<std::size_t>(it - species.begin()));
  }

  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw ScenarioError(ScenarioError::Kind::Parse,
                          where + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(header.size()) + " fields");
    InfluentSample s;
    s.conc.assign(species.size(), 0.0);
    try {
      s.t_min = std::stod(cells[0]);
      s.inlet = cells[1];
      s.flow = std::stod(cells[2]);
      for (std::size_t c = 0; c < column_species.size(); ++c)
        s.conc[column_species[c]] = std::stod(cells[3 + c]);
    } catch (const std::exception&) {
      throw ScenarioError(ScenarioError::Kind::Parse,
                          where + ":" + std::to_string(line_no) + ": malformed number");
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<InfluentSeries> resample_influent(const std::vector<InfluentSample>& samples,
                                              const NetworkModel& network, double delta,
                                              std::size_t species_count) {
  std::map<std::size_t, std::vector<const InfluentSample*>> by_tank;
  for (const InfluentSample& s : samples) {
    auto idx = network.find_tank(s.inlet);
    if (!idx)
      throw ScenarioError(ScenarioError::Kind::Parse, "influent: unknown inlet '" + s.inlet + "'");
    by_tank[*idx].push_back(&s);
  }
  std::vector<InfluentSeries> out;
  for (auto& [tank, rows] : by_tank) {
    std::stable_sort(rows.begin(), rows.end(),
                     [](auto* a, auto* b) { return a->t_min < b->t_min; });
    InfluentSeries series;
    series.tank = tank;
    const int first = static_cast<int>(std::ceil(rows.front()->t_min / delta - 1e-9));
    const int last = static_cast<int>(std::floor(rows.back()->t_min / delta + 1e-9));
    series.first_step = first;
    std::size_t seg = 0;
    for (int k = first; k <= last; ++k) {
      const double t = k * delta;
      while (seg + 1 < rows.size() && rows[seg + 1]->t_min <= t) ++seg;
      const InfluentSample& a = *rows[seg];
      std::vector<double> c(species_count, 0.0);
      double flow = a.flow;
      if (seg + 1 < rows.size() && t > a.t_min) {
        const InfluentSample& b = *rows[seg + 1];
        const double w = (t - a.t_min) / (b.t_min - a.t_min);
        flow = a.flow + w * (b.flow - a.flow);
        for (std::size_t s = 0; s < species_count; ++s)
          c[s] = a.conc[s] + w * (b.conc[s] - a.conc[s]);
      } else {
        c = a.conc;
      }
      series.flow.push_back(flow);
      series.conc.push_back(std::move(c));
    }
    out.push_back(std::move(series));
  }
  return out;
}

Scenario parse_scenario_unchecked(const json& doc, const std::filesystem::path& base_dir) {
  Scenario sc;
  sc.name = doc.value("name", std::string("scenario"));

  const json& jt = require(doc, "timing", "");
  sc.timing.delta = get_number(jt, "delta_min", "timing");
  sc.timing.capital_delta = get_number(jt, "control_period_min", "timing");
  sc.timing.horizon_steps = static_cast<int>(get_number(jt, "horizon_steps", "timing"));
  sc.timing.sim_periods = static_cast<int>(get_number(jt, "sim_periods", "timing"));
  sc.timing.am_order = static_cast<int>(get_number_or(jt, "am_order", 3, "timing"));

  for (const json& s : require(doc, "species", "")) sc.species.push_back(s.get<std::string>());
  const std::size_t m = sc.species.size();

  sc.network = parse_network(doc, sc.timing.delta);

  const json& jb = require(doc, "biology", "");
  for (std::size_t i : sc.network.plants()) {
    const std::string& id = sc.network.tank(i).id;
    if (!jb.contains(id)) parse_fail("biology." + id, "missing");
    sc.biology.push_back(parse_biology(jb.at(id), sc.species, "biology." + id));
  }
  const std::size_t r = sc.biology.empty() ? 0 : sc.biology.front().reaction_count();

  const json empty = json::object();
  const json& jw = doc.contains("weights") ? doc.at("weights") : empty;
  sc.weights.pollutant_release = weight_vector(jw, "pollutant_release", m, 1.0);
  sc.weights.regulation_violation = weight_vector(jw, "regulation_violation", m, 0.0);
  {
    std::vector<double> mg(r, 1.0);
    if (!sc.biology.empty())
      for (std::size_t j = 0; j < r; ++j)
        if (sc.biology.front().laws[j].kind == KineticKind::LinearDecay) mg[j] = 0.0;
    sc.weights.microbial_growth = jw.contains("microbial_growth")
                                      ? weight_vector(jw, "microbial_growth", r, 0.0)
                                      : mg;
  }
  sc.weights.slope = get_number_or(jw, "slope", 0.0, "weights");
  sc.weights.curvature = get_number_or(jw, "curvature", 0.0, "weights");
  sc.weights.final_volume = get_number_or(jw, "final_volume", 0.0, "weights");
  sc.weights.total_volume = get_number_or(jw, "total_volume", 0.0, "weights");
  sc.weights.plant_balance = get_number_or(jw, "plant_balance", 0.0, "weights");
  sc.weights.time_balance = get_number_or(jw, "time_balance", 0.0, "weights");
  sc.weights.flooding = get_number_or(jw, "flooding", 0.0, "weights");
  sc.weights.cso = get_number_or(jw, "cso", 0.0, "weights");

  sc.xi_max = doc.contains("xi_max") ? species_vector(doc.at("xi_max"), m, "xi_max")
                                     : std::vector<double>(m, 1e30);

  sc.initial = parse_initial(doc, sc.network, m);

  const json& ji = require(doc, "influent", "");
  std::vector<InfluentSample> samples;
  if (ji.contains("csv")) {
    samples = read_influent_csv(base_dir / ji.at("csv").get<std::string>(), sc.species);
  } else if (ji.contains("inline")) {
    for (const json& row : ji.at("inline")) {
      InfluentSample s;
      s.t_min = get_number(row, "t_min", "influent.inline");
      s.inlet = require(row, "inlet", "influent.inline").get<std::string>();
      s.flow = get_number(row, "flow", "influent.inline");
      s.conc = species_vector(require(row, "c", "influent.inline"), m, "influent.inline.c");
      samples.push_back(std::move(s));
    }
  } else {
    parse_fail("influent", "expected 'csv' or 'inline'");
  }
  sc.influent = resample_influent(samples, sc.network, sc.timing.delta, m);

  if (doc.contains("options")) {
    const json& jo = doc.at("options");
    if (jo.contains("underestimator")) {
      const json& u = jo.at("underestimator");
      sc.underestimator.enabled = u.value("enabled", false);
      sc.underestimator.s_max_factor = u.value("s_max_factor", 2.0);
    }
    if (jo.contains("solver")) {
      const json& s = jo.at("solver");
      sc.solver.tol = s.value("tol", sc.solver.tol);
      sc.solver.max_iter = s.value("max_iter", sc.solver.max_iter);
      sc.solver.time_limit = s.value("time_limit", sc.solver.time_limit);
    }
    sc.observation_noise = jo.value("observation_noise", 0.0);
    sc.seed = jo.value("seed", std::uint64_t{0});
    sc.volume_margin = jo.value("volume_margin", 0.0);
  }

  if (doc.contains("open_loop")) {
    const auto& act = sc.network.actuator_pipes();
    for (const json& row : doc.at("open_loop")) {
      std::vector<double> setpoints(act.size(), 0.0);
      for (std::size_t a = 0; a < act.size(); ++a)
        setpoints[a] = sc.initial.pipe_setpoint[act[a]];
      for (const auto& [label, v] : row.items()) {
        bool found = false;
        for (std::size_t a = 0; a < act.size(); ++a)
          if (sc.network.pipe(act[a]).label == label) {
            setpoints[a] = v.get<double>();
            found = true;
          }
        if (!found) parse_fail("open_loop." + label, "not an actuator label");
      }
      sc.open_loop.periods.push_back(std::move(setpoints));
    }
  }
  return sc;
}

Scenario parse_scenario(const json& doc, const std::filesystem::path& base_dir) {
  Scenario sc = parse_scenario_unchecked(doc, base_dir);
  auto problems = sc.violations();
  if (!problems.empty()) {
    std::string msg = "scenario '" + sc.name + "' is invalid:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ScenarioError(ScenarioError::Kind::Validation, msg, problems);
  }
  auto coverage = sc.coverage_violations();
  if (!coverage.empty()) {
    std::string msg = "scenario '" + sc.name + "' influent coverage:";
    for (const auto& p : coverage) msg += "\n  - " + p;
    throw ScenarioError(ScenarioError::Kind::Coverage, msg, coverage);
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(ScenarioError::Kind::Parse, "cannot open scenario " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioError(ScenarioError::Kind::Parse, path.filename().string() + ": " + e.what());
  }
  try {
    return parse_scenario(doc, path.parent_path());
  } catch (const json::exception& e) {
    throw ScenarioError(ScenarioError::Kind::Parse, path.filename().string() + ": " + e.what());
  }
}

json serialize_scenario(const Scenario& sc) {
  json doc;
  doc["name"] = sc.name;
  doc["species"] = sc.species;
  const NetworkModel& net = sc.network;

  json tanks = json::array();
  for (const Tank& t : net.tanks()) {
    json e = {{"id", t.id}, {"kind", to_string(t.kind)}};
    if (t.v_max != 0.0) e["v_max"] = t.v_max;
    if (t.is_plant()) {
      e["v_bar"] = t.v_bar;
      e["q_out_min"] = t.q_out_min;
      e["q_out_max"] = t.q_out_max;
    }
    if (t.beta != 0.0) e["beta"] = t.beta;
    if (t.has_external_inflow) e["external_inflow"] = true;
    tanks.push_back(std::move(e));
  }
  json pipes = json::array();
  for (const Pipe& p : net.pipes()) {
    json e = {{"label", p.label},
              {"from", net.tank(p.from).id},
              {"to", net.tank(p.to).id},
              {"q_max", p.q_max},
              {"delay_steps", p.delay_steps},
              {"control", to_string(p.control)}};
    if (p.q_min != 0.0) e["q_min"] = p.q_min;
    pipes.push_back(std::move(e));
  }
  doc["network"] = {{"tanks", tanks}, {"pipes", pipes}};

  json bio = json::object();
  for (std::size_t k = 0; k < sc.biology.size(); ++k) {
    const PlantBiology& b = sc.biology[k];
    json laws = json::array();
    for (const KineticLaw& law : b.laws) {
      json e;
      switch (law.kind) {
        case KineticKind::Contois:
          e = {{"type", "contois"}, {"k", law.k}};
          break;
        case KineticKind::MonodFixedBiomass:
          e = {{"type", "monod"}, {"k", law.k}, {"x_bar", law.x_bar}};
          break;
        case KineticKind::LinearDecay:
          e = {{"type", "decay"}};
          break;
      }
      e["mu_per_min"] = law.mu;
      if (law.kind != KineticKind::LinearDecay) e["substrate"] = b.species[law.substrate_index];
      e["biomass"] = b.species[law.biomass_index];
      laws.push_back(std::move(e));
    }
    bio[net.tank(net.plants()[k]).id] = {{"biomass", b.species[b.biomass_index]},
                                        {"kappa", b.kappa},
                                        {"laws", laws},
                                        {"death_rate_per_min", b.death_rate},
                                        {"effluent_biomass_factor", b.effluent_biomass_factor},
                                        {"decay_included", true}};
  }
  doc["biology"] = bio;

  doc["timing"] = {{"delta_min", sc.timing.delta},
                   {"control_period_min", sc.timing.capital_delta},
                   {"horizon_steps", sc.timing.horizon_steps},
                   {"sim_periods", sc.timing.sim_periods},
                   {"am_order", sc.timing.am_order}};
  const Weights& w = sc.weights;
  doc["weights"] = {{"pollutant_release", w.pollutant_release},
                    {"regulation_violation", w.regulation_violation},
                    {"microbial_growth", w.microbial_growth},
                    {"slope", w.slope},
                    {"curvature", w.curvature},
                    {"final_volume", w.final_volume},
                    {"total_volume", w.total_volume},
                    {"plant_balance", w.plant_balance},
                    {"time_balance", w.time_balance},
                    {"flooding", w.flooding},
                    {"cso", w.cso}};
  doc["xi_max"] = sc.xi_max;

  json volumes = json::object(), conc = json::object(), setpoints = json::object(),
       outflow = json::object();
  for (std::size_t i = 0; i < net.tank_count(); ++i) {
    if (net.tank(i).is_storage()) volumes[net.tank(i).id] = sc.initial.volume[i];
    conc[net.tank(i).id] = sc.initial.conc[i];
  }
  for (std::size_t p = 0; p < net.pipe_count(); ++p)
    if (net.pipe(p).is_actuator()) setpoints[net.pipe(p).label] = sc.initial.pipe_setpoint[p];
  for (std::size_t k = 0; k < net.plants().size(); ++k)
    outflow[net.tank(net.plants()[k]).id] = sc.initial.plant_outflow[k];
  doc["initial_state"] = {{"volumes", volumes},
                          {"concentrations", conc},
                          {"setpoints", setpoints},
                          {"plant_outflow", outflow}};

  json rows = json::array();
  for (const InfluentSeries& s : sc.influent)
    for (std::size_t k = 0; k < s.flow.size(); ++k)
      rows.push_back({{"t_min", (s.first_step + static_cast<int>(k)) * sc.timing.delta},
                      {"inlet", net.tank(s.tank).id},
                      {"flow", s.flow[k]},
                      {"c", s.conc[k]}});
  doc["influent"] = {{"inline", rows}};

  doc["options"] = {
      {"underestimator",
       {{"enabled", sc.underestimator.enabled}, {"s_max_factor", sc.underestimator.s_max_factor}}},
      {"solver",
       {{"tol", sc.solver.tol}, {"max_iter", sc.solver.max_iter}, {"time_limit", sc.solver.time_limit}}},
      {"observation_noise", sc.observation_noise},
      {"seed", sc.seed},
      {"volume_margin", sc.volume_margin}};

  if (!sc.open_loop.periods.empty()) {
    json periods = json::array();
    for (const auto& row : sc.open_loop.periods) {
      json e = json::object();
      const auto& act = net.actuator_pipes();
      for (std::size_t a = 0; a < act.size(); ++a) e[net.pipe(act[a]).label] = row[a];
      periods.push_back(std::move(e));
    }
    doc["open_loop"] = periods;
  }
  return doc;
}

}  // namespace sewerflow
