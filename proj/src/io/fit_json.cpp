#include "vecchia/fit_json.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vecchia/covariance.hpp"
#include "vecchia/error.hpp"

namespace vecchia::io {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  const std::size_t rows = j.size();
  const std::size_t cols = rows ? j.at(0).size() : 0;
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& row = j.at(r);
    if (row.size() != cols) fail(ErrorCode::ParseError, "ragged matrix in fit document");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = row.at(c).get<double>();
  }
  return m;
}

std::size_t raw_dimension(CovarianceKind kind, std::size_t nparms) {
  if (kind == CovarianceKind::ExponentialAnisotropic) return nparms - 2;
  return 2;
}

json config_to_json(const RunConfig& c) {
  json j;
  j["data"] = c.data_path;
  j["y_col"] = c.columns.y;
  j["x_cols"] = c.columns.x;
  j["loc_cols"] = c.columns.locs;
  j["intercept"] = c.columns.intercept;
  j["covfun"] = c.covfun;
  j["m"] = c.m;
  j["ordering"] = c.ordering.kind == OrderingSpec::Kind::Random ? "random" : "identity";
  j["seed"] = c.ordering.seed;
  j["max_iters"] = c.max_iters;
  j["tol"] = c.tol;
  j["jitter"] = c.jitter;
  j["start"] = c.start ? json(*c.start) : json(nullptr);
  return j;
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  c.data_path = j.at("data").get<std::string>();
  c.columns.y = j.at("y_col").get<std::string>();
  c.columns.x = j.at("x_cols").get<std::vector<std::string>>();
  c.columns.locs = j.at("loc_cols").get<std::vector<std::string>>();
  c.columns.intercept = j.at("intercept").get<bool>();
  c.covfun = j.at("covfun").get<std::string>();
  c.m = j.at("m").get<std::size_t>();
  c.ordering.kind = j.at("ordering").get<std::string>() == "random" ? OrderingSpec::Kind::Random
                                                                     : OrderingSpec::Kind::Identity;
  c.ordering.seed = j.at("seed").get<std::uint64_t>();
  c.max_iters = j.at("max_iters").get<std::size_t>();
  c.tol = j.at("tol").get<double>();
  c.jitter = j.at("jitter").get<double>();
  if (!j.at("start").is_null()) c.start = j.at("start").get<std::vector<double>>();
  return c;
}

json execution_to_json(const RunConfig& c) {
  return {{"backend", std::string(to_string(c.backend))},
          {"deterministic", c.deterministic},
          {"capacity_tier", c.capacity_tier},
          {"threads", c.threads}};
}

void execution_from_json(const json& j, RunConfig& c) {
  c.backend = parse_backend(j.at("backend").get<std::string>());
  c.deterministic = j.at("deterministic").get<bool>();
  c.capacity_tier = j.at("capacity_tier").get<std::size_t>();
  c.threads = j.at("threads").get<int>();
}

}  // namespace

std::string fit_json_string(const FitDocument& doc) {
  const FitResult& r = doc.result;
  const CovarianceFamily family(r.theta_hat.kind);
  json j;
  j["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  j["config"] = config_to_json(doc.config);
  j["execution"] = execution_to_json(doc.config);
  j["covfun"] = std::string(family.name());
  j["parameter_names"] =
      family.parameter_names(raw_dimension(r.theta_hat.kind, r.theta_hat.nparms()));
  j["theta_hat"] = r.theta_hat.theta;
  j["beta_hat"] = r.beta_hat;
  j["beta_cov"] = matrix_to_json(r.beta_cov);
  j["fisher_info"] = matrix_to_json(r.fisher_info);
  j["grad"] = r.grad;
  j["loglik"] = r.loglik_trace.empty() ? json(nullptr) : json(r.loglik_trace.back());
  j["loglik_trace"] = r.loglik_trace;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;

  json timings = json::object();
  for (const auto& [name, seconds] : r.phase_timings.entries) timings[name] = seconds * 1e3;
  timings["evaluate"] = r.evaluate_seconds * 1e3;
  timings["evaluations"] = r.evaluations;
  j["phase_timings"] = timings;
  return j.dump(2) + "\n";
}

void write_fit_json(const std::filesystem::path& path, const FitDocument& doc) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << fit_json_string(doc);
  if (!out) fail(ErrorCode::IoError, "failed writing " + path.string());
}

FitDocument parse_fit_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    FitDocument doc;
    doc.config = config_from_json(j.at("config"));
    if (j.contains("execution")) execution_from_json(j.at("execution"), doc.config);
    FitResult& r = doc.result;
    r.theta_hat.kind = parse_covariance_kind(j.at("covfun").get<std::string>());
    r.theta_hat.theta = j.at("theta_hat").get<std::vector<double>>();
    r.beta_hat = j.at("beta_hat").get<std::vector<double>>();
    r.beta_cov = matrix_from_json(j.at("beta_cov"));
    r.fisher_info = matrix_from_json(j.at("fisher_info"));
    r.grad = j.at("grad").get<std::vector<double>>();
    r.loglik_trace = j.at("loglik_trace").get<std::vector<double>>();
    r.iterations = j.at("iterations").get<std::size_t>();
    r.converged = j.at("converged").get<bool>();
    if (j.contains("phase_timings")) {
      for (const auto& [name, value] : j.at("phase_timings").items()) {
        if (name == "evaluate") {
          r.evaluate_seconds = value.get<double>() * 1e-3;
        } else if (name == "evaluations") {
          r.evaluations = value.get<std::size_t>();
        } else {
          r.phase_timings.add(name, value.get<double>() * 1e-3);
        }
      }
    }
    return doc;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("malformed fit document: ") + e.what());
  }
}

FitDocument read_fit_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_fit_json(text.str());
}

std::string strip_timings(const std::string& fit_json) {
  json j = json::parse(fit_json);
  j.erase("phase_timings");
  j.erase("execution");
  return j.dump(2) + "\n";
}

}  // namespace vecchia::io
