// Command line laboratory: seeded sampling, identity and inequality
// validation, local law / edge law / applications experiments, and the
// semicircle quantile table. Every run writes a manifest next to its outputs;
// rerunning from a manifest reproduces the result files byte for byte.

#include <chrono>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wigner/config.hpp"
#include "wigner/ensemble.hpp"
#include "wigner/errors.hpp"
#include "wigner/io.hpp"
#include "wigner/locallaw.hpp"
#include "wigner/pool.hpp"
#include "wigner/resolvent.hpp"
#include "wigner/rng.hpp"
#include "wigner/semicircle.hpp"
#include "wigner/spectral.hpp"
#include "wigner/version.hpp"

namespace fs = std::filesystem;
using namespace wigner;

namespace {

struct RunConfig {
  std::string subcommand;
  std::string plan_path;
  std::string plan_text;  // loaded from plan_path or a manifest
  std::uint64_t seed = kDefaultSeed;
  bool seed_given = false;
  int workers = hardware_workers();
  std::string out = ".";
  std::string format = "both";
  // sample
  int sample_n = 64;
  std::string family = "gaussian";
  double param = 0.0;
  std::string stage = "raw";
  // validate
  int val_n = 40;
  int val_seeds = 100;
  std::string val_grid = "5x5";
  // semicircle-table
  int table_n = 512;
};

bool want_json(const RunConfig& rc) { return rc.format != "csv"; }
bool want_csv(const RunConfig& rc) { return rc.format != "json"; }

// Output files of the current run, hashed for the manifest.
struct OutputLog {
  std::vector<std::pair<std::string, std::uint64_t>> files;

  void add(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot reopen output for hashing: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    files.emplace_back(fs::path(path).filename().string(), fnv1a64(ss.str()));
  }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed: " + path);
}

// The manifest captures everything needed to reproduce the run. Wall time is
// informational and excluded from the reproducibility contract.
void write_manifest(const RunConfig& rc, const std::string& path,
                    const OutputLog& log, double wall_s) {
  nlohmann::ordered_json j;
  j["tool"] = "wignerlab";
  j["version"] = WIGNER_VERSION;
  j["subcommand"] = rc.subcommand;
  j["seed"] = rc.seed;
  j["workers"] = rc.workers;
  j["format"] = rc.format;
  j["config_hash"] = hex64(fnv1a64(rc.plan_text));
  j["config"] = rc.plan_text;
  j["args"]["sample_n"] = rc.sample_n;
  j["args"]["family"] = rc.family;
  j["args"]["param"] = rc.param;
  j["args"]["stage"] = rc.stage;
  j["args"]["val_n"] = rc.val_n;
  j["args"]["val_seeds"] = rc.val_seeds;
  j["args"]["val_grid"] = rc.val_grid;
  j["args"]["table_n"] = rc.table_n;
  j["outputs"] = nlohmann::ordered_json::array();
  for (const auto& [name, hash] : log.files) {
    nlohmann::ordered_json o;
    o["file"] = name;
    o["fnv1a64"] = hex64(hash);
    j["outputs"].push_back(o);
  }
  j["wall_time_s"] = wall_s;
  write_text(path, j.dump(2) + "\n");
}

EnsembleSpec spec_from_flags(const RunConfig& rc, int n) {
  Family fam{};
  if (!family_from_name(rc.family, fam))
    throw ConfigError("unknown family '" + rc.family + "'");
  EnsembleSpec spec;
  spec.n = n;
  switch (fam) {
    case Family::rademacher:
      spec.dist = EntryDistribution::rademacher();
      break;
    case Family::gaussian:
      spec.dist = EntryDistribution::gaussian();
      break;
    case Family::student_t:
      spec.dist = EntryDistribution::student_t(rc.param);
      break;
    case Family::symmetric_pareto:
      spec.dist = EntryDistribution::symmetric_pareto(rc.param);
      break;
  }
  return spec;
}

PipelineStage stage_from_flags(const RunConfig& rc) {
  PipelineStage st{};
  if (!stage_from_name(rc.stage, st))
    throw ConfigError("unknown stage '" + rc.stage + "'");
  return st;
}

int cmd_sample(const RunConfig& rc, OutputLog& log) {
  const EnsembleSpec spec = spec_from_flags(rc, rc.sample_n);
  const WignerSample s = run_pipeline(spec, rc.seed, stage_from_flags(rc));
  const fs::path dir(rc.out);
  const std::string bin = (dir / "sample.bin").string();
  write_sample_bin(bin, s.W);
  log.add(bin);
  if (want_csv(rc)) {
    const std::string csv = (dir / "spectrum.csv").string();
    write_spectrum_csv(csv, s.seed, eigenvalues_of(s));
    log.add(csv);
  }
  if (want_json(rc)) {
    nlohmann::ordered_json j;
    j["n"] = s.spec.n;
    j["family"] = family_name(s.spec.dist.family);
    j["stage"] = stage_name(s.stage);
    j["seed"] = s.seed;
    j["truncated_count"] = s.truncated_count;
    j["trunc_mean"] = s.trunc_mean;
    j["sigma"] = s.sigma;
    const std::string meta = (dir / "sample.json").string();
    write_text(meta, j.dump(2) + "\n");
    log.add(meta);
  }
  return 0;
}

int cmd_validate(const RunConfig& rc, OutputLog& log) {
  int gu = 0, gv = 0;
  {
    char x = 0;
    std::istringstream ss(rc.val_grid);
    if (!(ss >> gu >> x >> gv) || x != 'x' || gu < 1 || gv < 1 ||
        !ss.eof())
      throw ConfigError("--grid expects ROWSxCOLS, e.g. 5x5");
  }
  if (rc.val_n < 2) throw ConfigError("--n must be at least 2");
  if (rc.val_seeds < 1) throw ConfigError("--seeds must be at least 1");

  const DomainD domain;
  IdentityReport ids;
  ValidationReport checks;
  // Instances cycle through n in [val_n - 10, val_n + 10] when room allows,
  // mirroring the documented 30..50 band around the default 40.
  const int lo_n = std::max(2, rc.val_n - 10);
  const int hi_n = rc.val_n + 10;
  const std::size_t instances = static_cast<std::size_t>(rc.val_seeds);
  std::vector<IdentityReport> id_parts(instances);
  std::vector<ValidationReport> chk_parts(instances);
  parallel_for(rc.workers, instances, [&](std::size_t i) {
    const std::uint64_t seed = split(rc.seed, i);
    const int n = lo_n + static_cast<int>(i % static_cast<std::size_t>(
                                              hi_n - lo_n + 1));
    EnsembleSpec spec;
    spec.n = n;
    spec.dist = EntryDistribution::gaussian();
    const WignerSample s = sample_raw(spec, seed);
    for (int iu = 0; iu < gu; ++iu) {
      const double u = gu == 1 ? 0.0
                               : -domain.u0 +
                                     2.0 * domain.u0 * iu /
                                         static_cast<double>(gu - 1);
      for (int iv = 0; iv < gv; ++iv) {
        const double vlo = domain.v_floor(n);
        const double vhi = domain.V;
        const double v =
            gv == 1 ? vhi
                    : vlo * std::pow(vhi / vlo,
                                     iv / static_cast<double>(gv - 1));
        const std::complex<double> z{u, v};
        auto idr = validate_identities(s, z);
        auto chr = validate_inequalities(s, z);
        id_parts[i].items.insert(id_parts[i].items.end(), idr.items.begin(),
                                 idr.items.end());
        chk_parts[i].checks.insert(chk_parts[i].checks.end(),
                                   chr.checks.begin(), chr.checks.end());
      }
    }
  });
  for (std::size_t i = 0; i < instances; ++i) {
    ids.items.insert(ids.items.end(), id_parts[i].items.begin(),
                     id_parts[i].items.end());
    checks.checks.insert(checks.checks.end(), chk_parts[i].checks.begin(),
                         chk_parts[i].checks.end());
  }

  const fs::path dir(rc.out);
  if (want_json(rc)) {
    const std::string p1 = (dir / "identities.json").string();
    write_text(p1, report_json(ids));
    log.add(p1);
    const std::string p2 = (dir / "inequalities.json").string();
    write_text(p2, report_json(checks));
    log.add(p2);
  }
  if (want_csv(rc)) {
    const std::string p1 = (dir / "identities.csv").string();
    {
      CsvWriter w(p1);
      w.row({"id", "residual", "tol", "passed", "n", "seed", "u", "v"});
      for (const auto& it : ids.items)
        w.row({it.id, fmt_double(it.residual), fmt_double(it.tol),
               it.passed ? "1" : "0", std::to_string(it.n),
               std::to_string(it.seed), fmt_double(it.u), fmt_double(it.v)});
    }
    log.add(p1);
    const std::string p2 = (dir / "inequalities.csv").string();
    {
      CsvWriter w(p2);
      w.row({"check", "passed", "margin", "n", "seed", "u", "v", "extra"});
      for (const auto& c : checks.checks)
        w.row({c.check_id, c.passed ? "1" : "0", fmt_double(c.margin),
               std::to_string(c.n), std::to_string(c.seed), fmt_double(c.u),
               fmt_double(c.v), fmt_double(c.extra)});
    }
    log.add(p2);
  }

  int failed = 0;
  for (const auto& it : ids.items)
    if (!it.passed) ++failed;
  for (const auto& c : checks.checks)
    if (!c.passed) ++failed;
  std::cout << "validated " << ids.items.size() << " identities and "
            << checks.checks.size() << " inequality checks, " << failed
            << " failures\n";
  if (failed) {
    for (const auto& it : ids.items)
      if (!it.passed)
        std::cerr << "identity " << it.id << " failed at n=" << it.n
                  << " seed=" << it.seed << " u=" << fmt_double(it.u)
                  << " v=" << fmt_double(it.v)
                  << " residual=" << fmt_double(it.residual) << "\n";
    for (const auto& c : checks.checks)
      if (!c.passed)
        std::cerr << "check " << c.check_id << " failed at n=" << c.n
                  << " seed=" << c.seed << " u=" << fmt_double(c.u)
                  << " v=" << fmt_double(c.v)
                  << " margin=" << fmt_double(c.margin) << "\n";
    return 1;
  }
  return 0;
}

int cmd_experiment(const RunConfig& rc, OutputLog& log) {
  if (rc.plan_text.empty())
    throw ConfigError(rc.subcommand + " needs --plan FILE");
  ConfigDoc doc = ConfigDoc::parse(rc.plan_text);
  PlanBundle bundle = load_plan(doc);
  for (const auto& w : bundle.warnings) std::cerr << "warning: " << w << "\n";
  if (bundle.experiment != rc.subcommand)
    std::cerr << "warning: plan says experiment = " << bundle.experiment
              << ", running " << rc.subcommand << "\n";
  if (rc.seed_given) bundle.plan.base_seed = rc.seed;

  const fs::path dir(rc.out);
  int exit_code = 0;
  if (rc.subcommand == "applications") {
    const ApplicationsReport rep = run_applications(bundle.plan, rc.workers);
    if (want_json(rc)) {
      const std::string p = (dir / "applications.json").string();
      write_text(p, report_json(rep));
      log.add(p);
    }
    if (want_csv(rc)) {
      const std::string p = (dir / "applications.csv").string();
      report_csv(rep, p);
      log.add(p);
    }
    std::cout << "applications over " << rep.rows.size() << " sizes, "
              << rep.samples.size() << " samples\n";
  } else {
    const bool edge = rc.subcommand == "edgelaw";
    const LocalLawReport rep = edge ? run_edge_law(bundle.plan, rc.workers)
                                    : run_local_law(bundle.plan, rc.workers);
    for (const auto& note : rep.preamble) std::cerr << "note: " << note << "\n";
    if (want_json(rc)) {
      const std::string p = (dir / (rc.subcommand + ".json")).string();
      write_text(p, report_json(rep));
      log.add(p);
    }
    if (want_csv(rc)) {
      const std::string p = (dir / (rc.subcommand + ".csv")).string();
      report_csv(rep, p);
      log.add(p);
    }
    std::cout << rc.subcommand << ": " << rep.cells.size() << " cells, "
              << rep.slopes.size() << " slopes, fitted C = "
              << fmt_double(rep.fitted_C) << "\n";
    if (bundle.has_slope_check) {
      for (const auto& f : rep.slopes) {
        if (std::abs(f.slope - bundle.slope_target) > bundle.slope_tol) {
          std::cerr << "slope check failed: n=" << f.n
                    << " u=" << fmt_double(f.u) << " p=" << f.p << " slope "
                    << fmt_double(f.slope) << " outside "
                    << fmt_double(bundle.slope_target) << " +- "
                    << fmt_double(bundle.slope_tol) << "\n";
          exit_code = 1;
        }
      }
    }
  }
  return exit_code;
}

int cmd_table(const RunConfig& rc, OutputLog& log) {
  if (rc.table_n < 1) throw ConfigError("--n must be at least 1");
  CsvWriter w(rc.out);
  w.row({"j", "gamma"});
  for (int j = 1; j <= rc.table_n; ++j)
    w.row({std::to_string(j), fmt_double(classical_location(j, rc.table_n))});
  w.close();
  log.add(rc.out);
  return 0;
}

int dispatch(RunConfig& rc) {
  if (!rc.plan_path.empty() && rc.plan_text.empty()) {
    std::ifstream in(rc.plan_path, std::ios::binary);
    if (!in) throw IoError("cannot open plan: " + rc.plan_path);
    std::ostringstream ss;
    ss << in.rdbuf();
    rc.plan_text = ss.str();
  }
  // Normalize the embedded config so the manifest hash is canonical.
  if (!rc.plan_text.empty()) {
    ConfigDoc doc = ConfigDoc::parse(rc.plan_text);
    PlanBundle bundle = load_plan(doc);
    if (rc.seed_given) bundle.plan.base_seed = rc.seed;
    rc.plan_text = canonical_config(bundle);
    rc.seed = bundle.plan.base_seed;
  }

  if (rc.subcommand == "semicircle-table") {
    fs::path out(rc.out);
    if (out.empty() || fs::is_directory(out)) out /= "gammas.csv";
    rc.out = out.string();
  }
  const fs::path out_dir = rc.subcommand == "semicircle-table"
                               ? fs::path(rc.out).parent_path()
                               : fs::path(rc.out);
  if (!out_dir.empty()) fs::create_directories(out_dir);

  const auto t0 = std::chrono::steady_clock::now();
  OutputLog log;
  int code = 0;
  if (rc.subcommand == "sample") code = cmd_sample(rc, log);
  else if (rc.subcommand == "validate") code = cmd_validate(rc, log);
  else if (rc.subcommand == "semicircle-table") code = cmd_table(rc, log);
  else code = cmd_experiment(rc, log);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  const fs::path manifest_path =
      rc.subcommand == "semicircle-table"
          ? fs::path(rc.out).concat(".manifest.json")
          : fs::path(rc.out) / "manifest.json";
  write_manifest(rc, manifest_path.string(), log, wall);
  return code;
}

RunConfig from_manifest(const std::string& path, const std::string& out_override,
                        int workers_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("manifest is not valid JSON: " + std::string(e.what()));
  }
  RunConfig rc;
  try {
    rc.subcommand = j.at("subcommand").get<std::string>();
    rc.seed = j.at("seed").get<std::uint64_t>();
    rc.seed_given = true;
    rc.workers = j.at("workers").get<int>();
    rc.format = j.at("format").get<std::string>();
    rc.plan_text = j.at("config").get<std::string>();
    const auto& a = j.at("args");
    rc.sample_n = a.at("sample_n").get<int>();
    rc.family = a.at("family").get<std::string>();
    rc.param = a.at("param").get<double>();
    rc.stage = a.at("stage").get<std::string>();
    rc.val_n = a.at("val_n").get<int>();
    rc.val_seeds = a.at("val_seeds").get<int>();
    rc.val_grid = a.at("val_grid").get<std::string>();
    rc.table_n = a.at("table_n").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("manifest is missing fields: " + std::string(e.what()));
  }
  if (workers_override > 0) rc.workers = workers_override;
  std::string table_name = "gammas.csv";
  if (rc.subcommand == "semicircle-table" && j.contains("outputs") &&
      !j["outputs"].empty())
    table_name = j["outputs"][0].value("file", table_name);
  if (!out_override.empty()) {
    rc.out = out_override;
    if (rc.subcommand == "semicircle-table")
      rc.out = (fs::path(out_override) / table_name).string();
  } else {
    const fs::path parent = fs::path(path).parent_path();
    rc.out = parent.empty() ? std::string(".") : parent.string();
    if (rc.subcommand == "semicircle-table")
      rc.out = (fs::path(rc.out) / table_name).string();
  }
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wignerlab: a computational laboratory for Wigner matrices"};
  app.require_subcommand(0, 1);
  app.set_version_flag("--version", WIGNER_VERSION);

  std::string manifest_path;
  std::string out_override;
  int workers_override = 0;
  app.add_option("--from-manifest", manifest_path,
                 "rerun a recorded experiment from its manifest");
  app.add_option("--out", out_override,
                 "output directory for the manifest rerun");
  app.add_option("--workers", workers_override,
                 "worker override for the manifest rerun");

  RunConfig rc;

  auto add_common = [&](CLI::App* sub, bool with_plan) {
    sub->add_option("--seed", rc.seed, "base seed (default 0xC0FFEE)")
        ->each([&](const std::string&) { rc.seed_given = true; });
    sub->add_option("--workers", rc.workers, "worker threads")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", rc.out, "output directory");
    sub->add_option("--format", rc.format, "report formats")
        ->check(CLI::IsMember({"json", "csv", "both"}));
    if (with_plan) sub->add_option("--plan", rc.plan_path, "plan config file");
  };

  auto* sample = app.add_subcommand("sample", "draw one seeded matrix sample");
  sample->add_option("--n", rc.sample_n, "matrix dimension")
      ->check(CLI::PositiveNumber);
  sample->add_option("--family", rc.family,
                     "rademacher|gaussian|student_t|symmetric_pareto");
  sample->add_option("--param", rc.param, "df or tail index");
  sample->add_option("--stage", rc.stage, "raw|truncated|recentered|rescaled");
  add_common(sample, false);

  auto* validate =
      app.add_subcommand("validate", "run the identity and inequality suites");
  validate->add_option("--n", rc.val_n, "centre of the dimension band");
  validate->add_option("--seeds", rc.val_seeds, "number of seeded instances");
  validate->add_option("--grid", rc.val_grid, "u x v grid, e.g. 5x5");
  add_common(validate, false);

  auto* locallaw =
      app.add_subcommand("locallaw", "bulk local law experiment from a plan");
  add_common(locallaw, true);
  auto* edgelaw =
      app.add_subcommand("edgelaw", "edge law experiment from a plan");
  add_common(edgelaw, true);
  auto* applications = app.add_subcommand(
      "applications", "rigidity, delocalization and counting statistics");
  add_common(applications, true);

  auto* table = app.add_subcommand("semicircle-table",
                                   "write the semicircle quantile table");
  table->add_option("--n", rc.table_n, "number of quantiles");
  add_common(table, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (!manifest_path.empty()) {
      RunConfig mrc = from_manifest(manifest_path, out_override, workers_override);
      return dispatch(mrc);
    }
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return 2;
    }
    rc.subcommand = app.get_subcommands().front()->get_name();
    return dispatch(rc);
  } catch (const ConfigError& e) {
    for (const auto& issue : e.issues()) std::cerr << "error: " << issue << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
