#include "pqc/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace pqc {

namespace {

using nlohmann::json;
using Kind = ParseError::Kind;

[[noreturn]] void schema(const std::string& path, const std::string& what) {
  throw ParseError(Kind::Schema, path, what);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) schema(path, "missing required field '" + key + "'");
  return obj.at(key);
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) schema(path, "expected a number");
  return v.get<double>();
}

long long integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) schema(path, "expected an integer");
  return v.get<long long>();
}

const json& array(const json& v, const std::string& path) {
  if (!v.is_array()) schema(path, "expected an array");
  return v;
}

Polynomial parse_poly(const json& v, int num_vars, const std::string& path) {
  if (!v.is_object()) schema(path, "expected a polynomial object");
  for (const auto& [key, _] : v.items()) {
    if (key != "terms") schema(path + "/" + key, "unknown field");
  }
  const std::string tpath = path + "/terms";
  const json& terms = array(require(v, "terms", path), tpath);
  std::vector<Monomial> out;
  for (size_t t = 0; t < terms.size(); ++t) {
    const std::string p = tpath + "/" + std::to_string(t);
    const json& term = terms[t];
    if (!term.is_object()) schema(p, "expected a term object");
    const double coef = number(require(term, "coef", p), p + "/coef");
    if (!std::isfinite(coef)) schema(p + "/coef", "coefficient must be finite");
    const json& exps = array(require(term, "exps", p), p + "/exps");
    if (exps.size() != static_cast<size_t>(num_vars)) {
      throw ParseError(Kind::ExponentLength, p + "/exps",
                       "term " + std::to_string(t) + " has " + std::to_string(exps.size()) +
                           " exponents but num_vars is " + std::to_string(num_vars));
    }
    std::vector<int> e;
    for (size_t k = 0; k < exps.size(); ++k) {
      const long long ek = integer(exps[k], p + "/exps/" + std::to_string(k));
      if (ek < 0 || ek > 1000) schema(p + "/exps/" + std::to_string(k), "exponent must lie in [0, 1000]");
      e.push_back(static_cast<int>(ek));
    }
    out.push_back({coef, std::move(e)});
  }
  return Polynomial(num_vars, std::move(out));
}

std::vector<Polynomial> parse_poly_list(const json& doc, const std::string& key, int num_vars, bool required) {
  if (!doc.contains(key)) {
    if (required) schema("", "missing required field '" + key + "'");
    return {};
  }
  const std::string path = "/" + key;
  const json& list = array(doc.at(key), path);
  std::vector<Polynomial> out;
  for (size_t i = 0; i < list.size(); ++i) out.push_back(parse_poly(list[i], num_vars, path + "/" + std::to_string(i)));
  return out;
}

json poly_json(const Polynomial& p) {
  json terms = json::array();
  for (const auto& t : p.terms()) terms.push_back({{"coef", t.coef}, {"exps", t.exps}});
  return {{"terms", terms}};
}

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json indices_json(const std::vector<int>& idx) {
  json out = json::array();
  for (int i : idx) out.push_back(i + 1);
  return out;
}

json witness_json(const SingularWitness& w) {
  return {{"alpha", w.alpha},
          {"x", vec_json(w.x)},
          {"lambda", vec_json(w.lambda)},
          {"kappa", vec_json(w.kappa)},
          {"K", indices_json(w.K)},
          {"L", indices_json(w.L)},
          {"residual_norm", w.residual_norm},
          {"side_conditions_ok", w.side_conditions_ok},
          {"min_lambda", finite_or_null(w.min_lambda)},
          {"min_slack", finite_or_null(w.min_slack)}};
}

Vector vec_from(const json& v, const std::string& path) {
  const json& a = array(v, path);
  Vector out(static_cast<Eigen::Index>(a.size()));
  for (size_t i = 0; i < a.size(); ++i) out[static_cast<Eigen::Index>(i)] = number(a[i], path + "/" + std::to_string(i));
  return out;
}

std::vector<int> indices_from(const json& v, const std::string& path) {
  const json& a = array(v, path);
  std::vector<int> out;
  for (size_t i = 0; i < a.size(); ++i) out.push_back(static_cast<int>(integer(a[i], path + "/" + std::to_string(i))) - 1);
  return out;
}

double inf_if_null(const json& v, const std::string& path) {
  return v.is_null() ? std::numeric_limits<double>::infinity() : number(v, path);
}

SingularWitness witness_from(const json& j, const std::string& path) {
  SingularWitness w;
  w.alpha = number(require(j, "alpha", path), path + "/alpha");
  w.x = vec_from(require(j, "x", path), path + "/x");
  w.lambda = vec_from(require(j, "lambda", path), path + "/lambda");
  w.kappa = vec_from(require(j, "kappa", path), path + "/kappa");
  w.K = indices_from(require(j, "K", path), path + "/K");
  w.L = indices_from(require(j, "L", path), path + "/L");
  w.residual_norm = number(require(j, "residual_norm", path), path + "/residual_norm");
  const json& ok = require(j, "side_conditions_ok", path);
  if (!ok.is_boolean()) schema(path + "/side_conditions_ok", "expected a boolean");
  w.side_conditions_ok = ok.get<bool>();
  w.min_lambda = inf_if_null(require(j, "min_lambda", path), path + "/min_lambda");
  w.min_slack = inf_if_null(require(j, "min_slack", path), path + "/min_slack");
  return w;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(Kind::Syntax, "", std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

ProblemInstance parse_problem(const std::string& text) {
  const json doc = parse_json(text);
  if (!doc.is_object()) schema("", "document must be a JSON object");
  static const std::vector<std::string> known{"name",       "num_vars",   "objective",   "inequalities", "equalities",
                                              "perturbable", "sample_box", "description", "provenance"};
  for (const auto& [key, _] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) schema("/" + key, "unknown field");
  }
  const json& name = require(doc, "name", "");
  if (!name.is_string()) schema("/name", "expected a string");
  const long long n = integer(require(doc, "num_vars", ""), "/num_vars");
  if (n < 1 || n > 64) schema("/num_vars", "num_vars must lie in [1, 64]");
  const int nv = static_cast<int>(n);

  auto ineqs = parse_poly_list(doc, "inequalities", nv, true);
  auto eqs = parse_poly_list(doc, "equalities", nv, false);
  std::optional<Polynomial> objective;
  if (doc.contains("objective") && !doc.at("objective").is_null()) {
    objective = parse_poly(doc.at("objective"), nv, "/objective");
  }

  std::optional<std::vector<int>> perturbable;
  if (doc.contains("perturbable")) {
    const json& list = array(doc.at("perturbable"), "/perturbable");
    std::vector<int> idx;
    for (size_t k = 0; k < list.size(); ++k) {
      const std::string p = "/perturbable/" + std::to_string(k);
      const long long v = integer(list[k], p);
      if (v < 1 || v > static_cast<long long>(ineqs.size())) {
        throw ParseError(Kind::IndexRange, p,
                         "index " + std::to_string(v) + " outside 1.." + std::to_string(ineqs.size()));
      }
      if (std::find(idx.begin(), idx.end(), static_cast<int>(v - 1)) != idx.end()) schema(p, "duplicate index");
      idx.push_back(static_cast<int>(v - 1));
    }
    perturbable = std::move(idx);
  }

  std::optional<std::vector<Interval>> box;
  if (doc.contains("sample_box")) {
    const json& list = array(doc.at("sample_box"), "/sample_box");
    if (list.size() != static_cast<size_t>(nv)) schema("/sample_box", "expected one interval per variable");
    std::vector<Interval> b;
    for (size_t k = 0; k < list.size(); ++k) {
      const std::string p = "/sample_box/" + std::to_string(k);
      const json& iv = array(list[k], p);
      if (iv.size() != 2) schema(p, "expected [lo, hi]");
      const Interval in{number(iv[0], p + "/0"), number(iv[1], p + "/1")};
      if (!(in.lo < in.hi) || !std::isfinite(in.lo) || !std::isfinite(in.hi)) schema(p, "need finite lo < hi");
      b.push_back(in);
    }
    box = std::move(b);
  }
  try {
    return ProblemInstance(name.get<std::string>(), nv, std::move(ineqs), std::move(eqs), std::move(objective),
                           std::move(perturbable), std::move(box));
  } catch (const Error& e) {
    schema("", e.what());
  }
}

ProblemInstance parse_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem(ss.str());
}

std::string problem_to_json(const ProblemInstance& prob, const std::string& description,
                            const std::string& provenance) {
  json doc;
  doc["name"] = prob.name();
  if (!description.empty()) doc["description"] = description;
  if (!provenance.empty()) doc["provenance"] = provenance;
  doc["num_vars"] = prob.num_vars();
  if (prob.objective()) doc["objective"] = poly_json(*prob.objective());
  doc["inequalities"] = json::array();
  for (const auto& g : prob.inequalities()) doc["inequalities"].push_back(poly_json(g));
  doc["equalities"] = json::array();
  for (const auto& h : prob.equalities()) doc["equalities"].push_back(poly_json(h));
  doc["perturbable"] = indices_json(prob.perturbable());
  doc["sample_box"] = json::array();
  for (const auto& iv : prob.sample_box()) doc["sample_box"].push_back({iv.lo, iv.hi});
  return doc.dump(2);
}

std::string scan_report_to_json(const ScanReport& r) {
  json doc;
  doc["problem"] = r.problem;
  doc["window"] = {r.window.lo, r.window.hi};
  doc["singular_values"] = r.singular_values;
  doc["witnesses"] = json::array();
  for (const auto& w : r.witnesses) doc["witnesses"].push_back(witness_json(w));
  doc["uncertain"] = json::array();
  for (const auto& w : r.uncertain) doc["uncertain"].push_back(witness_json(w));
  doc["bound"] = r.bound.str();
  doc["starts"] = r.starts;
  doc["seed"] = r.seed;
  doc["systems"] = r.systems;
  return doc.dump(2);
}

ScanReport scan_report_from_json(const std::string& text) {
  const json doc = parse_json(text);
  if (!doc.is_object()) schema("", "scan report must be a JSON object");
  ScanReport r;
  const json& name = require(doc, "problem", "");
  if (!name.is_string()) schema("/problem", "expected a string");
  r.problem = name.get<std::string>();
  const Vector window = vec_from(require(doc, "window", ""), "/window");
  if (window.size() != 2) schema("/window", "expected [lo, hi]");
  r.window = {window[0], window[1]};
  const Vector values = vec_from(require(doc, "singular_values", ""), "/singular_values");
  r.singular_values.assign(values.data(), values.data() + values.size());
  const json& ws = array(require(doc, "witnesses", ""), "/witnesses");
  for (size_t i = 0; i < ws.size(); ++i) r.witnesses.push_back(witness_from(ws[i], "/witnesses/" + std::to_string(i)));
  const json& us = array(require(doc, "uncertain", ""), "/uncertain");
  for (size_t i = 0; i < us.size(); ++i) r.uncertain.push_back(witness_from(us[i], "/uncertain/" + std::to_string(i)));
  const json& bound = require(doc, "bound", "");
  if (!bound.is_string()) schema("/bound", "expected a decimal string");
  try {
    r.bound = BigInt(bound.get<std::string>());
  } catch (const std::exception&) {
    schema("/bound", "not a decimal integer");
  }
  r.starts = static_cast<int>(integer(require(doc, "starts", ""), "/starts"));
  const json& seed = require(doc, "seed", "");
  if (!seed.is_number_unsigned() && !seed.is_number_integer()) schema("/seed", "expected an integer");
  r.seed = seed.get<std::uint64_t>();
  r.systems = static_cast<int>(integer(require(doc, "systems", ""), "/systems"));
  return r;
}

namespace {

json certificate_json(const MfcqCertificate& c) {
  json j;
  j["method"] = c.method == MfcqCertificate::Method::Lp ? "lp" : "hull";
  j["verdict"] = to_string(c.verdict);
  j["active_set"] = indices_json(c.active.indices);
  j["active_tolerance"] = c.active.tolerance;
  j["direction"] = vec_json(c.direction);
  j["margin"] = finite_or_null(c.margin);
  j["lambda"] = vec_json(c.lambda);
  j["kappa"] = vec_json(c.kappa);
  j["hull_distance"] = finite_or_null(c.hull_distance);
  j["equality_gradients_independent"] = c.equality_gradients_independent;
  j["tolerance"] = c.tolerance;
  if (!c.reason.empty()) j["reason"] = c.reason;
  return j;
}

}  // namespace

std::string certificate_to_json(const MfcqCertificate& cert) { return certificate_json(cert).dump(2); }

std::string sweep_to_json(const SweepReport& r) {
  json doc;
  doc["seed"] = r.seed;
  doc["infeasible"] = r.infeasible;
  doc["samples"] = r.entries.size();
  doc["holds"] = r.holds;
  doc["fails"] = r.fails;
  doc["degenerate"] = r.degenerate;
  doc["min_margin"] = finite_or_null(r.min_margin);
  doc["entries"] = json::array();
  for (const auto& e : r.entries) {
    doc["entries"].push_back(
        {{"sample_id", e.sample_id}, {"x", vec_json(e.x)}, {"lp", certificate_json(e.lp)}, {"hull", certificate_json(e.hull)}});
  }
  return doc.dump(2);
}

}  // namespace pqc
