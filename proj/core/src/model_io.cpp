#include "bmapinf/model_io.hpp"

#include <fstream>
#include <set>

#include "bmapinf/error.hpp"

namespace bmapinf {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::InvalidInput, msg); }

void only_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) bad(where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items())
    if (!ok.contains(key)) bad("unknown field '" + key + "' in " + where);
}

const json& field(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) bad("missing field '" + std::string(key) + "' in " + where);
  return *it;
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) bad(where + " must be a number");
  return j.get<double>();
}

Matrix square_matrix(const json& j, Eigen::Index d, const std::string& where) {
  if (!j.is_array()) bad(where + " must be an array");
  Matrix m(d, d);
  const auto n = static_cast<std::size_t>(d);
  if (!j.empty() && j.front().is_array()) {
    if (j.size() != n) bad(where + " must have d rows");
    for (std::size_t i = 0; i < n; ++i) {
      if (!j[i].is_array() || j[i].size() != n) bad(where + " must have d columns in every row");
      for (std::size_t k = 0; k < n; ++k)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = number(j[i][k], where);
    }
  } else {
    if (j.size() != n * n) bad(where + " must have d*d entries");
    for (std::size_t idx = 0; idx < n * n; ++idx)
      m(static_cast<Eigen::Index>(idx / n), static_cast<Eigen::Index>(idx % n)) = number(j[idx], where);
  }
  return m;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

BatchSizeDistribution batch_from_json(const json& j, const std::string& where) {
  only_keys(j, {"family", "params"}, where);
  const json& fam = field(j, "family", where);
  if (!fam.is_string()) bad(where + ".family must be a string");
  const std::string family = fam.get<std::string>();
  const json params = j.contains("params") ? j.at("params") : json::object();
  const std::string pw = where + ".params";
  if (family == "finite") {
    only_keys(params, {"pmf"}, pw);
    const json& pmf = field(params, "pmf", pw);
    if (!pmf.is_array()) bad(pw + ".pmf must be an array");
    std::vector<double> p;
    for (const auto& x : pmf) p.push_back(number(x, pw + ".pmf"));
    return BatchSizeDistribution::finite(std::move(p));
  }
  if (family == "geometric") {
    only_keys(params, {"p"}, pw);
    return BatchSizeDistribution::geometric(number(field(params, "p", pw), pw + ".p"));
  }
  if (family == "zeta") {
    only_keys(params, {"alpha"}, pw);
    return BatchSizeDistribution::zeta(number(field(params, "alpha", pw), pw + ".alpha"));
  }
  if (family == "logheavy") {
    only_keys(params, {"beta"}, pw);
    return BatchSizeDistribution::log_heavy(number(field(params, "beta", pw), pw + ".beta"));
  }
  bad("unknown batch family '" + family + "' in " + where);
}

}  // namespace

ModelDocument model_from_json(const json& j) {
  only_keys(j, {"name", "d", "d0", "streams"}, "model");
  ModelDocument doc;
  if (j.contains("name")) {
    if (!j["name"].is_string()) bad("model.name must be a string");
    doc.name = j["name"].get<std::string>();
  }
  const json& dj = field(j, "d", "model");
  if (!dj.is_number_integer() || dj.get<long long>() < 1) bad("model.d must be a positive integer");
  const auto d = static_cast<Eigen::Index>(dj.get<long long>());
  doc.model.d0 = square_matrix(field(j, "d0", "model"), d, "model.d0");
  const json& streams = field(j, "streams", "model");
  if (!streams.is_array()) bad("model.streams must be an array");
  for (std::size_t nu = 0; nu < streams.size(); ++nu) {
    const std::string where = "model.streams[" + std::to_string(nu) + "]";
    const json& s = streams[nu];
    only_keys(s, {"label", "rate_matrix", "batch", "service_rate"}, where);
    ArrivalStream st;
    if (s.contains("label")) {
      if (!s["label"].is_string()) bad(where + ".label must be a string");
      st.label = s["label"].get<std::string>();
    }
    st.rate_matrix = square_matrix(field(s, "rate_matrix", where), d, where + ".rate_matrix");
    st.batch = batch_from_json(field(s, "batch", where), where + ".batch");
    st.service_rate = number(field(s, "service_rate", where), where + ".service_rate");
    doc.model.streams.push_back(std::move(st));
  }
  return doc;
}

json batch_to_json(const BatchSizeDistribution& batch) {
  json params = json::object();
  switch (batch.family()) {
    case BatchFamily::Finite: {
      json pmf = json::array();
      for (double p : batch.finite_pmf()) pmf.push_back(p);
      params["pmf"] = std::move(pmf);
      break;
    }
    case BatchFamily::Geometric: params["p"] = batch.parameter(); break;
    case BatchFamily::Zeta: params["alpha"] = batch.parameter(); break;
    case BatchFamily::LogHeavy: params["beta"] = batch.parameter(); break;
  }
  return {{"family", std::string(family_name(batch.family()))}, {"params", std::move(params)}};
}

json model_to_json(const MbmapModel& model, const std::string& name) {
  json j = json::object();
  if (!name.empty()) j["name"] = name;
  j["d"] = model.d0.rows();
  j["d0"] = matrix_json(model.d0);
  json streams = json::array();
  for (const auto& s : model.streams) {
    streams.push_back({{"label", s.label},
                       {"rate_matrix", matrix_json(s.rate_matrix)},
                       {"batch", batch_to_json(s.batch)},
                       {"service_rate", s.service_rate}});
  }
  j["streams"] = std::move(streams);
  return j;
}

ModelDocument load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) bad("cannot open model file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    bad("model file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return model_from_json(j);
}

}  // namespace bmapinf
