#include "pqc/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "CLI11.hpp"
#include "pqc/error.hpp"
#include "pqc/esqm.hpp"
#include "pqc/io.hpp"
#include "pqc/qualification.hpp"
#include "pqc/scanner.hpp"

namespace pqc {

namespace {

struct UsageError : Error {
  using Error::Error;
};

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(flag + ": '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw UsageError(flag + ": expected a comma-separated list of numbers");
  return out;
}

Vector to_vector(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())); }

std::string format_vector(const Vector& v) {
  std::ostringstream os;
  os << std::setprecision(10) << "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ")";
  return os.str();
}

std::string format_indices(const std::vector<int>& idx) {
  std::string s = "{";
  for (size_t k = 0; k < idx.size(); ++k) s += (k ? "," : "") + std::to_string(idx[k] + 1);
  return s + "}";
}

struct ProblemFlags {
  std::string name;
  std::string file;
  int n = 2;
  int d = 2;
  std::string a;

  void add(CLI::App* app) {
    app->add_option("--problem", name, "Built-in problem name");
    app->add_option("--file", file, "Problem document (JSON)");
    app->add_option("--n", n, "Dimension for ball_box and grid_boxes");
    app->add_option("--d", d, "Even degree parameter for grid_boxes");
    app->add_option("--a", a, "Center a as a comma-separated list");
  }

  ProblemInstance load() const {
    if (!name.empty() && !file.empty()) throw UsageError("give either --problem or --file, not both");
    if (!file.empty()) return parse_problem_file(file);
    if (name.empty()) throw UsageError("a problem is required (--problem NAME or --file PATH)");
    CatalogParams params{n, d, {}};
    if (!a.empty()) params.a = parse_list(a, "--a");
    return catalog(name, params);
  }
};

struct PerturbationFlags {
  double alpha = 0.0;
  std::string mu;

  void add(CLI::App* app) {
    app->add_option("--alpha", alpha, "Diagonal perturbation level");
    app->add_option("--mu", mu, "Vector perturbation, one bound per inequality");
  }

  PerturbationSpec spec(const ProblemInstance& prob) const {
    if (mu.empty()) return DiagonalPerturbation{alpha};
    auto v = parse_list(mu, "--mu");
    if (v.size() != static_cast<size_t>(prob.num_inequalities())) {
      throw UsageError("--mu needs " + std::to_string(prob.num_inequalities()) + " values");
    }
    return VectorPerturbation{std::move(v)};
  }
};

struct OutputFlags {
  std::string out;
  std::string format = "text";

  void add(CLI::App* app) {
    app->add_option("--out", out, "Write the report to this file");
    app->add_option("--format", format, "Report format")->check(CLI::IsMember({"text", "json", "csv"}));
  }

  // Format used for the --out file: explicit json/csv, else from the extension.
  std::string file_format() const {
    if (format != "text") return format;
    if (out.size() >= 4 && out.substr(out.size() - 4) == ".csv") return "csv";
    if (out.size() >= 5 && out.substr(out.size() - 5) == ".json") return "json";
    return "text";
  }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write '" + path + "'");
  f << content;
  if (content.empty() || content.back() != '\n') f << '\n';
}

void emit(const OutputFlags& o, std::ostream& out, const std::string& text, const std::string& json,
          const std::string& csv) {
  auto pick = [&](const std::string& fmt) -> const std::string& {
    if (fmt == "json") return json;
    if (fmt == "csv") return csv;
    return text;
  };
  if (!o.out.empty()) {
    write_file(o.out, pick(o.file_format()));
    out << text;
    out << "report written to " << o.out << "\n";
  } else {
    out << pick(o.format);
    if (o.format != "text") out << "\n";
  }
}

std::string certificate_text(const MfcqCertificate& c) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << (c.method == MfcqCertificate::Method::Lp ? "lp  " : "hull") << ": " << to_string(c.verdict)
     << "  active=" << format_indices(c.active.indices);
  if (c.method == MfcqCertificate::Method::Lp) {
    os << "  margin=" << c.margin;
  } else {
    os << "  hull_distance=" << c.hull_distance;
  }
  os << "  direction=" << format_vector(c.direction);
  if (c.lambda.size() > 0) os << "  lambda=" << format_vector(c.lambda);
  if (c.kappa.size() > 0) os << "  kappa=" << format_vector(c.kappa);
  if (!c.reason.empty()) os << "  (" << c.reason << ")";
  os << "\n";
  return os.str();
}

Polynomial objective_of(const ProblemInstance& prob, const std::string& linear) {
  if (!linear.empty()) {
    const auto c = parse_list(linear, "--linear");
    if (c.size() != static_cast<size_t>(prob.num_vars())) {
      throw UsageError("--linear needs " + std::to_string(prob.num_vars()) + " coefficients");
    }
    Polynomial f(prob.num_vars());
    for (int k = 0; k < prob.num_vars(); ++k) f += c[static_cast<size_t>(k)] * Polynomial::variable(prob.num_vars(), k);
    return f;
  }
  if (prob.objective()) return *prob.objective();
  throw UsageError("no objective: pass --linear c1,...,cn or use a document with an objective");
}

struct EsqmFlags {
  std::string linear;
  std::string x0;
  double beta0 = 10.0;
  double delta = 1.0;
  int max_iter = 5000;
  double kkt_tol = 1e-8;
  double step_tol = 1e-10;

  void add(CLI::App* app) {
    app->add_option("--linear", linear, "Linear objective coefficients");
    app->add_option("--x0", x0, "Starting point (default: center of the sample box)");
    app->add_option("--beta0", beta0, "Initial penalty");
    app->add_option("--delta", delta, "Penalty increment");
    app->add_option("--max-iter", max_iter, "Iteration limit per run");
    app->add_option("--kkt-tol", kkt_tol, "KKT residual tolerance");
    app->add_option("--step-tol", step_tol, "Step length tolerance");
  }

  EsqmParams params() const {
    EsqmParams p;
    p.beta0 = beta0;
    p.delta = delta;
    p.max_iter = max_iter;
    p.kkt_tol = kkt_tol;
    p.step_tol = step_tol;
    return p;
  }

  Vector start(const ProblemInstance& prob) const {
    if (!x0.empty()) {
      const auto v = parse_list(x0, "--x0");
      if (v.size() != static_cast<size_t>(prob.num_vars())) throw UsageError("--x0 has the wrong dimension");
      return to_vector(v);
    }
    Vector c(prob.num_vars());
    for (int k = 0; k < prob.num_vars(); ++k) {
      const auto& iv = prob.sample_box()[static_cast<size_t>(k)];
      c[k] = 0.5 * (iv.lo + iv.hi);
    }
    return c;
  }
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Constraint qualification analysis for perturbed polynomial constraint sets", "pqc"};
  app.require_subcommand(1);

  auto* bound = app.add_subcommand("bound", "Milnor-Thom bound on the number of singular perturbations");
  int bn = 0, bm = 0, bd = 0, br = 0;
  bound->add_option("--n", bn, "Number of variables")->required();
  bound->add_option("--m", bm, "Number of inequalities")->required();
  bound->add_option("--d", bd, "Maximum constraint degree")->required();
  bound->add_option("--r", br, "Number of equalities");

  auto* mfcq = app.add_subcommand("mfcq", "Certify MFCQ at a point or over sampled boundary points");
  ProblemFlags mfcq_prob;
  PerturbationFlags mfcq_pert;
  OutputFlags mfcq_out;
  std::string point;
  int samples = 1000;
  std::uint64_t mfcq_seed = 7;
  int mfcq_workers = 0;
  double mfcq_tol = 1e-9;
  double active_tol = kDefaultActiveTol;
  mfcq_prob.add(mfcq);
  mfcq_pert.add(mfcq);
  mfcq_out.add(mfcq);
  mfcq->add_option("--point", point, "Point to certify; omit to sweep boundary samples");
  mfcq->add_option("--samples", samples, "Boundary samples for a sweep");
  mfcq->add_option("--seed", mfcq_seed, "Sweep seed");
  mfcq->add_option("--workers", mfcq_workers, "Worker threads (0 = all cores)");
  mfcq->add_option("--tol", mfcq_tol, "Verdict tolerance on the margin");
  mfcq->add_option("--active-tol", active_tol, "Active-set tolerance");

  auto* scan = app.add_subcommand("scan", "Enumerate singular diagonal perturbations in a window");
  ProblemFlags scan_prob;
  OutputFlags scan_out;
  std::string window;
  int starts = 200;
  std::uint64_t scan_seed = 7;
  int scan_workers = 0;
  scan_prob.add(scan);
  scan_out.add(scan);
  scan->add_option("--window", window, "Half-open alpha window lo,hi")->required();
  scan->add_option("--starts", starts, "Random starts per activity pattern");
  scan->add_option("--seed", scan_seed, "Random seed");
  scan->add_option("--workers", scan_workers, "Worker threads (0 = all cores)");

  auto* esqm = app.add_subcommand("esqm", "Run the extended sequential quadratic method");
  ProblemFlags esqm_prob;
  OutputFlags esqm_out;
  EsqmFlags esqm_flags;
  double esqm_alpha = 0.0;
  esqm_prob.add(esqm);
  esqm_out.add(esqm);
  esqm_flags.add(esqm);
  esqm->add_option("--alpha", esqm_alpha, "Diagonal perturbation level");

  auto* homotopy = app.add_subcommand("homotopy", "Warm-started ESQM along a decreasing alpha schedule");
  ProblemFlags hom_prob;
  OutputFlags hom_out;
  EsqmFlags hom_flags;
  std::string schedule;
  hom_prob.add(homotopy);
  hom_out.add(homotopy);
  hom_flags.add(homotopy);
  homotopy->add_option("--schedule", schedule, "Strictly decreasing positive alpha values")->required();

  auto* cat = app.add_subcommand("catalog", "Emit built-in problem documents");
  ProblemFlags cat_prob;
  std::string cat_out;
  cat_prob.add(cat);
  cat->add_option("--out", cat_out, "Write the document to this file");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    out << std::setprecision(12);
    if (bound->parsed()) {
      out << milnor_thom_bound(bn, bm, bd, br) << "\n";
      return 0;
    }

    if (cat->parsed()) {
      if (cat_prob.name.empty() && cat_prob.file.empty()) {
        for (const auto& n : catalog_names()) out << n << "\n";
        return 0;
      }
      const auto doc = problem_to_json(cat_prob.load(), "", "built-in catalog");
      if (cat_out.empty()) {
        out << doc << "\n";
      } else {
        write_file(cat_out, doc);
        out << "document written to " << cat_out << "\n";
      }
      return 0;
    }

    if (mfcq->parsed()) {
      const auto prob = mfcq_prob.load();
      const auto pert = mfcq_pert.spec(prob);
      MfcqOptions opts;
      opts.tol = mfcq_tol;
      opts.active_tol = active_tol;
      if (!point.empty()) {
        const auto xv = parse_list(point, "--point");
        if (xv.size() != static_cast<size_t>(prob.num_vars())) throw UsageError("--point has the wrong dimension");
        const Vector x = to_vector(xv);
        const auto lp = check_mfcq_lp(prob, pert, x, opts);
        const auto hull = check_mfcq_hull(prob, pert, x, opts);
        std::ostringstream text;
        text << std::setprecision(10) << "problem " << prob.name() << " at x=" << format_vector(x) << "\n"
             << "verdict: " << to_string(lp.verdict) << "\n"
             << certificate_text(lp) << certificate_text(hull);
        const std::string json = "{\"lp\": " + certificate_to_json(lp) + ", \"hull\": " + certificate_to_json(hull) + "}";
        std::ostringstream csv;
        csv << std::setprecision(17) << "method,verdict,margin_or_distance\nlp," << to_string(lp.verdict) << ","
            << lp.margin << "\nhull," << to_string(hull.verdict) << "," << hull.hull_distance << "\n";
        emit(mfcq_out, out, text.str(), json, csv.str());
        return lp.verdict == Verdict::Holds ? 0 : 1;
      }
      SweepConfig cfg;
      cfg.samples = samples;
      cfg.seed = mfcq_seed;
      cfg.workers = mfcq_workers;
      cfg.mfcq = opts;
      const auto report = sweep_mfcq(prob, pert, cfg);
      std::ostringstream text;
      text << std::setprecision(10) << "problem " << prob.name() << " seed " << report.seed << "\n";
      if (report.infeasible) {
        text << "sweep infeasible: no strictly feasible point found in the sample box\n";
      } else {
        text << "samples " << report.entries.size() << ": holds " << report.holds << ", fails " << report.fails
             << ", degenerate " << report.degenerate << "\nmin margin " << report.min_margin << "\n";
      }
      emit(mfcq_out, out, text.str(), sweep_to_json(report), sweep_to_csv(report, prob.num_vars()));
      if (report.infeasible) return 1;
      return report.fails + report.degenerate > 0 ? 1 : 0;
    }

    if (scan->parsed()) {
      const auto prob = scan_prob.load();
      const auto w = parse_list(window, "--window");
      if (w.size() != 2) throw UsageError("--window expects lo,hi");
      ScanOptions opts;
      opts.workers = scan_workers;
      const auto report = scan_singular(prob, {w[0], w[1]}, starts, scan_seed, opts);
      std::ostringstream text;
      text << std::setprecision(12) << "problem " << report.problem << " window [" << report.window.lo << ", "
           << report.window.hi << ") starts " << report.starts << " seed " << report.seed << "\n"
           << "patterns " << report.systems << ", bound " << report.bound << "\n"
           << "singular values: " << report.singular_values.size() << "\n";
      for (const auto& wit : report.witnesses) {
        text << "  alpha=" << wit.alpha << "  K=" << format_indices(wit.K) << " L=" << format_indices(wit.L)
             << "  x=" << format_vector(wit.x) << "  residual=" << wit.residual_norm << "\n";
      }
      if (!report.uncertain.empty()) {
        text << "uncertain (side conditions borderline): " << report.uncertain.size() << "\n";
        for (const auto& wit : report.uncertain) {
          text << "  alpha=" << wit.alpha << "  K=" << format_indices(wit.K) << " L=" << format_indices(wit.L)
               << "  min_lambda=" << wit.min_lambda << " min_slack=" << wit.min_slack << "\n";
        }
      }
      emit(scan_out, out, text.str(), scan_report_to_json(report), scan_to_csv(report));
      return 0;
    }

    if (esqm->parsed()) {
      const auto prob = esqm_prob.load();
      const auto f = objective_of(prob, esqm_flags.linear);
      auto params = esqm_flags.params();
      params.alpha = esqm_alpha;
      const auto trace = run_esqm(prob, f, esqm_flags.start(prob), params);
      std::ostringstream text;
      text << std::setprecision(12) << "problem " << prob.name() << " alpha " << esqm_alpha << "\n"
           << "status " << to_string(trace.status) << " after " << trace.iterations() << " iterations ("
           << trace.reason << ")\n"
           << "x = " << format_vector(trace.x_final()) << "  f = " << f.evaluate(trace.x_final()) << "\n"
           << "beta0 " << trace.beta0 << " final beta " << trace.betas.back() << " retries " << trace.retries << "\n";
      if (!trace.kkt_residuals.empty()) text << "kkt residual " << trace.kkt_residuals.back() << "\n";
      emit(esqm_out, out, text.str(), esqm_trace_to_json(trace), esqm_trace_to_csv(trace));
      return trace.status == EsqmStatus::Converged ? 0 : 1;
    }

    if (homotopy->parsed()) {
      const auto prob = hom_prob.load();
      const auto f = objective_of(prob, hom_flags.linear);
      const auto sched = parse_list(schedule, "--schedule");
      const auto trace = homotopy_run(prob, f, sched, hom_flags.start(prob), hom_flags.params());
      std::ostringstream text;
      text << std::setprecision(12) << "problem " << prob.name() << "\n";
      std::ostringstream csv;
      csv << std::setprecision(17) << "alpha,value,status,iterations";
      for (int k = 0; k < prob.num_vars(); ++k) csv << ",x" << (k + 1);
      csv << "\n";
      bool stalled = false;
      for (const auto& l : trace.levels) {
        text << "  alpha=" << l.alpha << "  val=" << l.value << "  x=" << format_vector(l.x) << "  "
             << to_string(l.status);
        if (l.stalled) text << "  (possibly singular alpha)";
        text << "\n";
        csv << l.alpha << "," << l.value << "," << to_string(l.status) << "," << l.trace.iterations();
        for (Eigen::Index k = 0; k < l.x.size(); ++k) csv << "," << l.x[k];
        csv << "\n";
        stalled = stalled || l.stalled;
      }
      emit(hom_out, out, text.str(), homotopy_to_json(trace), csv.str());
      return stalled ? 1 : 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace pqc
