#include "factiv/serialization.hpp"

#include <fstream>

#include "factiv/errors.hpp"

namespace factiv {

using nlohmann::json;

namespace {

const char* kCellKeys[kCells] = {"z00", "z01", "z10", "z11"};
const char* kTreatKeys[kCells] = {"d00", "d01", "d10", "d11"};

double number_or_throw(const json& j, const std::string& where) {
  if (!j.is_number())
    throw SchemaError("expected a number at " + where);
  return j.get<double>();
}

}  // namespace

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw SchemaError("cannot parse '" + path + "': " + e.what());
  }
  return j;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

MomentsSpec moments_from_json(const json& j) {
  MomentsSpec spec;
  if (j.contains("k")) spec.outcome_upper_bound = number_or_throw(j.at("k"), "k");

  if (!j.contains("cells")) throw SchemaError("moments file lacks 'cells'");
  for (int z = 0; z < kCells; ++z) {
    const std::string key = kCellKeys[z];
    if (!j.at("cells").contains(key))
      throw SchemaError("moments file lacks cell '" + key + "'");
    const json& c = j.at("cells").at(key);
    auto& cell = spec.cells[static_cast<std::size_t>(z)];
    if (c.contains("n")) cell.mass = number_or_throw(c.at("n"), key + ".n");
    cell.dbar_a = number_or_throw(c.at("dbar_a"), key + ".dbar_a");
    cell.dbar_b = number_or_throw(c.at("dbar_b"), key + ".dbar_b");
    if (c.contains("ybar") && !c.at("ybar").is_null())
      cell.ybar = number_or_throw(c.at("ybar"), key + ".ybar");
  }

  if (j.contains("joint_z11")) {
    const json& jt = j.at("joint_z11");
    for (int d = 0; d < kCells; ++d) {
      const std::string key = std::string("p_") + kTreatKeys[d];
      spec.joint_z11[static_cast<std::size_t>(d)] =
          jt.contains(key) ? number_or_throw(jt.at(key), "joint_z11." + key) : 0.0;
    }
  } else {
    // Fall back to independent takeup within the double-assignment cell.
    const auto& c = spec.cells[static_cast<std::size_t>(cell_index(1, 1))];
    spec.joint_z11[cell_index(0, 0)] = (1 - c.dbar_a) * (1 - c.dbar_b);
    spec.joint_z11[cell_index(0, 1)] = (1 - c.dbar_a) * c.dbar_b;
    spec.joint_z11[cell_index(1, 0)] = c.dbar_a * (1 - c.dbar_b);
    spec.joint_z11[cell_index(1, 1)] = c.dbar_a * c.dbar_b;
  }

  if (j.contains("cell_means")) {
    for (const auto& [key, value] : j.at("cell_means").items()) {
      // Keys look like "z10_d00".
      if (key.size() != 7 || key[0] != 'z' || key[3] != '_' || key[4] != 'd')
        throw SchemaError("bad cell_means key '" + key + "'");
      const int za = key[1] - '0', zb = key[2] - '0';
      const int da = key[5] - '0', db = key[6] - '0';
      if ((za | zb | da | db) & ~1)
        throw SchemaError("bad cell_means key '" + key + "'");
      if (value.is_null()) continue;
      spec.treat_mean[static_cast<std::size_t>(cell_index(za, zb))]
                     [static_cast<std::size_t>(cell_index(da, db))] =
          number_or_throw(value, "cell_means." + key);
    }
  }

  if (j.contains("iv")) {
    const json& iv = j.at("iv");
    auto read4 = [&](const char* key) -> std::optional<std::array<double, 4>> {
      if (!iv.contains(key)) return std::nullopt;
      const json& arr = iv.at(key);
      if (!arr.is_array() || arr.size() != 4)
        throw SchemaError(std::string("iv.") + key + " must hold 4 numbers");
      std::array<double, 4> out{};
      for (int i = 0; i < 4; ++i)
        out[static_cast<std::size_t>(i)] =
            number_or_throw(arr[static_cast<std::size_t>(i)], key);
      return out;
    };
    spec.iv_beta = read4("beta");
    spec.iv_se = read4("se");
  }
  return spec;
}

json moments_to_json(const MomentsSpec& spec) {
  json j;
  j["schema_version"] = 1;
  j["k"] = spec.outcome_upper_bound;
  for (int z = 0; z < kCells; ++z) {
    const auto& cell = spec.cells[static_cast<std::size_t>(z)];
    json c;
    c["n"] = cell.mass;
    c["dbar_a"] = cell.dbar_a;
    c["dbar_b"] = cell.dbar_b;
    if (cell.ybar) c["ybar"] = *cell.ybar;
    j["cells"][kCellKeys[z]] = c;
  }
  for (int d = 0; d < kCells; ++d)
    j["joint_z11"][std::string("p_") + kTreatKeys[d]] =
        spec.joint_z11[static_cast<std::size_t>(d)];
  for (int z = 0; z < kCells; ++z) {
    for (int d = 0; d < kCells; ++d) {
      const auto& m = spec.treat_mean[static_cast<std::size_t>(z)]
                                     [static_cast<std::size_t>(d)];
      if (m)
        j["cell_means"][std::string(kCellKeys[z]) + "_" + kTreatKeys[d]] = *m;
    }
  }
  if (spec.iv_beta) j["iv"]["beta"] = *spec.iv_beta;
  if (spec.iv_se) j["iv"]["se"] = *spec.iv_se;
  return j;
}

MomentsSpec load_moments_file(const std::string& path) {
  return moments_from_json(load_json_file(path));
}

namespace oracle {

PopulationSpec population_spec_from_json(const json& j) {
  PopulationSpec spec;
  if (j.contains("mode"))
    spec.mode = population_mode_from_string(j.at("mode").get<std::string>());
  if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();

  if (!j.contains("profiles") || !j.at("profiles").is_array())
    throw SchemaError("population spec lacks a 'profiles' array");
  for (const auto& p : j.at("profiles")) {
    ProfileProb prof;
    prof.a = parse_compliance_map(p.at("a").get<std::string>());
    prof.b = parse_compliance_map(p.at("b").get<std::string>());
    prof.prob = number_or_throw(p.at("prob"), "profiles[].prob");
    if (p.contains("outcomes")) {
      const json& o = p.at("outcomes");
      if (!o.is_array() || o.size() != 4)
        throw SchemaError("profile outcomes must hold [y00, y01, y10, y11]");
      prof.outcomes = PotentialOutcomes{o[0].get<double>(), o[1].get<double>(),
                                        o[2].get<double>(), o[3].get<double>()};
    }
    spec.profiles.push_back(prof);
  }

  if (j.contains("assignment")) {
    const json& a = j.at("assignment");
    for (int z = 0; z < kCells; ++z) {
      const std::string key = std::string("p_") + kCellKeys[z];
      spec.assignment.p[static_cast<std::size_t>(z)] =
          number_or_throw(a.at(key), "assignment." + key);
    }
  }

  if (j.contains("outcomes")) {
    const json& o = j.at("outcomes");
    OutcomeModel& m = spec.outcomes;
    if (o.contains("k")) m.k = number_or_throw(o.at("k"), "outcomes.k");
    if (o.contains("monotone_response"))
      m.monotone_response = o.at("monotone_response").get<bool>();
    if (o.contains("y11_ge_y00")) m.y11_ge_y00 = o.at("y11_ge_y00").get<bool>();
    if (o.contains("y11_ge_max")) m.y11_ge_max = o.at("y11_ge_max").get<bool>();
    if (o.contains("no_interaction"))
      m.no_interaction = o.at("no_interaction").get<bool>();
    if (o.contains("homogeneous")) {
      const json& h = o.at("homogeneous");
      OutcomeModel::Homogeneous hom;
      hom.tau_a = number_or_throw(h.at("tau_a"), "homogeneous.tau_a");
      hom.tau_b = number_or_throw(h.at("tau_b"), "homogeneous.tau_b");
      if (h.contains("tau_ab"))
        hom.tau_ab = number_or_throw(h.at("tau_ab"), "homogeneous.tau_ab");
      m.homogeneous = hom;
    }
  }
  return spec;
}

json population_spec_to_json(const PopulationSpec& spec) {
  json j;
  j["schema_version"] = 1;
  j["mode"] = to_string(spec.mode);
  j["seed"] = spec.seed;
  j["profiles"] = json::array();
  for (const auto& p : spec.profiles) {
    json e;
    e["a"] = format_compliance_map(p.a);
    e["b"] = format_compliance_map(p.b);
    e["prob"] = p.prob;
    if (p.outcomes)
      e["outcomes"] = {p.outcomes->y00, p.outcomes->y01, p.outcomes->y10,
                       p.outcomes->y11};
    j["profiles"].push_back(e);
  }
  for (int z = 0; z < kCells; ++z)
    j["assignment"][std::string("p_") + kCellKeys[z]] =
        spec.assignment.p[static_cast<std::size_t>(z)];
  json o;
  o["k"] = spec.outcomes.k;
  o["monotone_response"] = spec.outcomes.monotone_response;
  o["y11_ge_y00"] = spec.outcomes.y11_ge_y00;
  o["y11_ge_max"] = spec.outcomes.y11_ge_max;
  o["no_interaction"] = spec.outcomes.no_interaction;
  if (spec.outcomes.homogeneous)
    o["homogeneous"] = {{"tau_a", spec.outcomes.homogeneous->tau_a},
                        {"tau_b", spec.outcomes.homogeneous->tau_b},
                        {"tau_ab", spec.outcomes.homogeneous->tau_ab}};
  j["outcomes"] = o;
  return j;
}

PopulationSpec load_population_spec_file(const std::string& path) {
  return population_spec_from_json(load_json_file(path));
}

}  // namespace oracle

}  // namespace factiv
