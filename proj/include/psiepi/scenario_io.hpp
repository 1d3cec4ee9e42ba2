#pragma once

// Canonical JSON encoding of scenarios. Keys are sorted and floats use the
// shortest representation that round-trips, so files diff cleanly and
// re-serialization is byte-identical.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "psiepi/inequality.hpp"

namespace psiepi {

using Json = nlohmann::json;

inline constexpr const char *kScenarioFileVersion = "1";

struct RawMeasurement {
  int j1 = 0;
  int j2 = 0;
  std::array<CMatrix, 3> effects;
};

/// Parsed but not yet validated scenario file.
struct ScenarioFile {
  std::string version = kScenarioFileVersion;
  int dim = 0;
  int n = 0;
  Field field = Field::real;
  std::vector<CVector> states;
  std::vector<RawMeasurement> measurements;
  Json metadata = Json::object();
};

namespace detail {

inline Json encode_number(Complex z, Field field) {
  if (field == Field::real)
    return z.real();
  return Json::array({z.real(), z.imag()});
}

inline Complex decode_number(const Json &j, const std::string &where) {
  if (j.is_number())
    return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw Error(ErrorCode::MalformedFile, where + ": expected a number or [re, im]");
}

inline const Json &require(const Json &obj, const char *key) {
  if (!obj.is_object() || !obj.contains(key))
    throw Error(ErrorCode::MalformedFile, std::string("missing key '") + key + "'");
  return obj.at(key);
}

inline int require_int(const Json &obj, const char *key) {
  const Json &v = require(obj, key);
  if (!v.is_number_integer())
    throw Error(ErrorCode::MalformedFile, std::string("'") + key + "' must be an integer");
  return v.get<int>();
}

} // namespace detail

inline Json to_json(const ScenarioFile &f) {
  Json j;
  j["version"] = f.version;
  j["dim"] = f.dim;
  j["n"] = f.n;
  j["field"] = to_string(f.field);
  Json states = Json::array();
  for (const CVector &v : f.states) {
    Json s = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
      s.push_back(detail::encode_number(v(i), f.field));
    states.push_back(std::move(s));
  }
  j["states"] = std::move(states);
  Json ms = Json::array();
  for (const RawMeasurement &m : f.measurements) {
    Json effects = Json::array();
    for (const CMatrix &e : m.effects) {
      Json rows = Json::array();
      for (Eigen::Index r = 0; r < e.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < e.cols(); ++c)
          row.push_back(detail::encode_number(e(r, c), f.field));
        rows.push_back(std::move(row));
      }
      effects.push_back(std::move(rows));
    }
    ms.push_back({{"j1", m.j1}, {"j2", m.j2}, {"effects", std::move(effects)}});
  }
  j["measurements"] = std::move(ms);
  j["metadata"] = f.metadata.is_null() ? Json::object() : f.metadata;
  return j;
}

/// Structural parse. Throws MalformedFile for anything that does not match
/// the schema; numerical invariants are checked by to_scenario.
inline ScenarioFile parse_scenario_json(const Json &j) {
  using detail::require;
  using detail::require_int;
  ScenarioFile f;
  const Json &version = require(j, "version");
  if (!version.is_string() || version.get<std::string>() != kScenarioFileVersion)
    throw Error(ErrorCode::MalformedFile, "unsupported version (expected \"1\")");
  f.dim = require_int(j, "dim");
  f.n = require_int(j, "n");
  const Json &field = require(j, "field");
  if (!field.is_string())
    throw Error(ErrorCode::MalformedFile, "'field' must be a string");
  try {
    f.field = parse_field(field.get<std::string>());
  } catch (const Error &e) {
    throw Error(ErrorCode::MalformedFile, e.what());
  }
  if (f.dim < kMinDim || f.dim > kMaxDim)
    throw Error(ErrorCode::MalformedFile, "dim outside [2, 8]");
  if (f.n < 1 || f.n > 64)
    throw Error(ErrorCode::MalformedFile, "n outside [1, 64]");

  const Json &states = require(j, "states");
  if (!states.is_array())
    throw Error(ErrorCode::MalformedFile, "'states' must be an array");
  for (std::size_t s = 0; s < states.size(); ++s) {
    const Json &row = states[s];
    if (!row.is_array() || static_cast<int>(row.size()) != f.dim)
      throw Error(ErrorCode::MalformedFile,
                  "state " + std::to_string(s) + " must have " + std::to_string(f.dim) + " entries");
    CVector v(f.dim);
    for (int i = 0; i < f.dim; ++i)
      v(i) = detail::decode_number(row[static_cast<std::size_t>(i)], "state " + std::to_string(s));
    f.states.push_back(std::move(v));
  }

  const Json &ms = require(j, "measurements");
  if (!ms.is_array())
    throw Error(ErrorCode::MalformedFile, "'measurements' must be an array");
  for (std::size_t m = 0; m < ms.size(); ++m) {
    RawMeasurement raw;
    raw.j1 = require_int(ms[m], "j1");
    raw.j2 = require_int(ms[m], "j2");
    const Json &effects = require(ms[m], "effects");
    const std::string where = "measurement (" + std::to_string(raw.j1) + "," + std::to_string(raw.j2) + ")";
    if (!effects.is_array() || effects.size() != 3)
      throw Error(ErrorCode::MalformedFile, where + " must have exactly 3 effects");
    for (std::size_t e = 0; e < 3; ++e) {
      const Json &rows = effects[e];
      if (!rows.is_array() || static_cast<int>(rows.size()) != f.dim)
        throw Error(ErrorCode::MalformedFile, where + " effect " + std::to_string(e) + " has the wrong shape");
      CMatrix mat(f.dim, f.dim);
      for (int r = 0; r < f.dim; ++r) {
        const Json &row = rows[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<int>(row.size()) != f.dim)
          throw Error(ErrorCode::MalformedFile, where + " effect " + std::to_string(e) + " has the wrong shape");
        for (int c = 0; c < f.dim; ++c)
          mat(r, c) = detail::decode_number(row[static_cast<std::size_t>(c)], where);
      }
      raw.effects[e] = std::move(mat);
    }
    f.measurements.push_back(std::move(raw));
  }
  if (j.contains("metadata")) {
    if (!j.at("metadata").is_object())
      throw Error(ErrorCode::MalformedFile, "'metadata' must be an object");
    f.metadata = j.at("metadata");
  }
  return f;
}

inline ScenarioFile parse_scenario_text(const std::string &text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error &e) {
    throw Error(ErrorCode::MalformedFile, e.what());
  }
  return parse_scenario_json(j);
}

/// Checks numerical invariants and builds the Scenario. Failures name the
/// offending state or measurement.
inline Scenario to_scenario(const ScenarioFile &f) {
  if (static_cast<int>(f.states.size()) != f.n + 1)
    throw Error(ErrorCode::InvalidScenario,
                "expected " + std::to_string(f.n + 1) + " states, found " + std::to_string(f.states.size()));
  std::vector<PureState> states;
  for (std::size_t s = 0; s < f.states.size(); ++s) {
    const CVector &v = f.states[s];
    if (!v.allFinite())
      throw Error(ErrorCode::InvalidScenario, "state " + std::to_string(s) + " has non-finite entries");
    if (std::abs(v.norm() - 1.0) > kNormTolerance)
      throw Error(ErrorCode::InvalidScenario,
                  "state " + std::to_string(s) + " is not normalized (norm " + std::to_string(v.norm()) + ")");
    if (f.field == Field::real && (v.imag().array() != 0.0).any())
      throw Error(ErrorCode::InvalidScenario, "state " + std::to_string(s) + " is complex in a real scenario");
    states.push_back(make_state(v));
  }
  std::map<PairKey, Measurement> ms;
  for (const RawMeasurement &raw : f.measurements) {
    const PairKey k{raw.j1, raw.j2};
    if (!(1 <= raw.j1 && raw.j1 < raw.j2 && raw.j2 <= f.n))
      throw Error(ErrorCode::InvalidScenario, "measurement label " + to_string(k) + " is out of range");
    if (ms.contains(k))
      throw Error(ErrorCode::InvalidScenario, "duplicate measurement " + to_string(k));
    ms.emplace(k, Measurement({Effect(raw.effects[0]), Effect(raw.effects[1]), Effect(raw.effects[2])}));
  }
  if (f.n < 3)
    throw Error(ErrorCode::BadN, "n must be >= 3");
  return Scenario::create(f.field, std::move(states), std::move(ms));
}

inline ScenarioFile to_file(const Scenario &sc, Json metadata = Json::object()) {
  ScenarioFile f;
  f.dim = sc.dim();
  f.n = sc.n();
  f.field = sc.field();
  for (const PureState &s : sc.states())
    f.states.push_back(s.coeffs());
  for (const auto &[k, m] : sc.measurements())
    f.measurements.push_back({k.j1, k.j2, {m[0].matrix(), m[1].matrix(), m[2].matrix()}});
  f.metadata = std::move(metadata);
  return f;
}

/// Canonical text: sorted keys, two-space indent, trailing newline.
inline std::string dump_canonical(const ScenarioFile &f) {
  return to_json(f).dump(2) + "\n";
}

inline std::string read_text_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::MalformedFile, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes via a temporary sibling and rename, so readers never see a
/// partial file.
inline void write_file_atomic(const std::filesystem::path &path, const std::string &text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw Error(ErrorCode::InvalidArgument, "cannot write " + tmp.string());
    out << text;
    if (!out)
      throw Error(ErrorCode::InvalidArgument, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline ScenarioFile load_scenario_file(const std::filesystem::path &path) {
  return parse_scenario_text(read_text_file(path));
}

} // namespace psiepi
