// Command-line front end: simulate / fit / bench / eval.
//
// Exit codes: 0 ok, 2 config error, 3 numerical abort.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tgcca/deflation.hpp"
#include "tgcca/io.hpp"
#include "tgcca/linalg.hpp"
#include "tgcca/log.hpp"
#include "tgcca/simgen.hpp"
#include "tgcca/solver.hpp"
#include "tgcca/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tgcca;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// FNV-1a over file bytes; enough to detect dataset drift in manifests.
std::string file_hash(const std::string& path) {
  std::string bytes = read_text_file(path);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int i = next++; i < count; i = next++) fn(i);
      } catch (...) {
        errors[static_cast<size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 int threads, std::optional<std::uint64_t> seed_override) {
  SimSpec spec = parse_sim_config(read_text_file(config_path));
  if (seed_override) spec.seed = *seed_override;
  fs::create_directories(out_dir);

  SimulatedData data = sample_dataset(spec);
  const size_t num_blocks = spec.blocks.size();

  json manifest;
  manifest["version"] = kVersion;
  manifest["tool"] = "tgcca";
  manifest["config"] = json::parse(read_text_file(config_path));
  manifest["seed"] = spec.seed;
  manifest["eta"] = spec.eta;
  manifest["n"] = spec.n;
  manifest["folds"] = spec.folds;

  json jblocks = json::array();
  for (size_t l = 0; l < num_blocks; ++l) {
    const std::string true_file =
        "true_block" + std::to_string(l + 1) + ".tnsr";
    DenseTensor wt(spec.blocks[l].dims, data.true_w[l]);
    write_tensor((fs::path(out_dir) / true_file).string(), wt);
    json jb;
    jb["dims"] = spec.blocks[l].dims;
    jb["rho"] = spec.blocks[l].rho;
    jb["true_file"] = true_file;
    jb["true_rank"] = data.true_cp[l].rank();
    jblocks.push_back(jb);
  }
  manifest["blocks"] = jblocks;

  std::vector<std::vector<std::string>> fold_files(
      static_cast<size_t>(spec.folds));
  parallel_for(spec.folds, threads, [&](int f) {
    auto& files = fold_files[static_cast<size_t>(f)];
    for (size_t l = 0; l < num_blocks; ++l) {
      const std::string name = "fold" + std::to_string(f + 1) + "_block" +
                               std::to_string(l + 1) + ".tnsr";
      const Block& blk = data.folds[static_cast<size_t>(f)].blocks[l];
      write_tensor((fs::path(out_dir) / name).string(), blk.stacked());
      files.push_back(name);
    }
  });
  manifest["fold_files"] = fold_files;

  json hashes;
  for (const auto& files : fold_files)
    for (const auto& name : files)
      hashes[name] = file_hash((fs::path(out_dir) / name).string());
  manifest["hashes"] = hashes;

  write_text_file((fs::path(out_dir) / "manifest.json").string(),
                  manifest.dump(2) + "\n");
  log::info("simulate: wrote %d folds x %zu blocks to %s", spec.folds,
            num_blocks, out_dir.c_str());
  return 0;
}

// --------------------------------------------------------------------- fit

struct CsvRow {
  std::string model;
  int block;
  int fold;
  int component;
  double cosine;
  double criterion;
  double seconds;
};

void write_csv(const std::string& path, const std::vector<CsvRow>& rows,
               bool with_summary) {
  std::ostringstream os;
  os << "model,block,fold,component,cosine,criterion,seconds\n";
  for (const auto& r : rows)
    os << r.model << ',' << r.block << ',' << r.fold << ',' << r.component
       << ',' << fmt_double(r.cosine) << ',' << fmt_double(r.criterion) << ','
       << fmt_double(r.seconds) << '\n';
  if (with_summary) {
    // nearest-rank median and 2.5%/97.5% quantiles over folds
    std::map<std::pair<int, int>, std::vector<const CsvRow*>> groups;
    for (const auto& r : rows) groups[{r.block, r.component}].push_back(&r);
    for (const auto& [key, grp] : groups) {
      std::vector<double> cos, crit, sec;
      for (const auto* r : grp) {
        cos.push_back(r->cosine);
        crit.push_back(r->criterion);
        sec.push_back(r->seconds);
      }
      const std::string model = grp.front()->model;
      struct Q {
        const char* label;
        double level;
      };
      for (Q q : {Q{"median", 0.5}, Q{"q2.5", 0.025}, Q{"q97.5", 0.975}}) {
        os << model << ',' << key.first << ',' << q.label << ',' << key.second
           << ',' << fmt_double(nearest_rank_quantile(cos, q.level)) << ','
           << fmt_double(nearest_rank_quantile(crit, q.level)) << ','
           << fmt_double(nearest_rank_quantile(sec, q.level)) << '\n';
      }
    }
  }
  write_text_file(path, os.str());
}

int cmd_fit(const std::string& config_path, const std::string& data_dir,
            const std::string& out_dir, int threads,
            std::optional<std::uint64_t> seed_override) {
  FitConfig cfg = parse_fit_config(read_text_file(config_path));
  if (seed_override) cfg.opts.seed = *seed_override;
  fs::create_directories(out_dir);

  json j = json::parse(read_text_file(config_path));
  const int components = j.value("components", 1);

  // resolve data: manifest-driven (preferred) or direct block paths = 1 fold
  std::vector<std::vector<std::string>> fold_paths;
  std::vector<std::string> true_paths;
  if (!data_dir.empty()) {
    json manifest =
        json::parse(read_text_file((fs::path(data_dir) / "manifest.json").string()));
    for (const auto& files : manifest["fold_files"]) {
      std::vector<std::string> paths;
      for (const auto& f : files)
        paths.push_back((fs::path(data_dir) / f.get<std::string>()).string());
      fold_paths.push_back(std::move(paths));
    }
    for (const auto& jb : manifest["blocks"])
      true_paths.push_back(
          (fs::path(data_dir) / jb["true_file"].get<std::string>()).string());
  } else if (!cfg.block_paths.empty()) {
    fold_paths.push_back(cfg.block_paths);
  } else {
    throw ConfigError("fit: need --data or a blocks list in the config");
  }

  const size_t num_blocks = fold_paths.front().size();
  if (cfg.opts.ranks.empty())
    cfg.opts.ranks.assign(num_blocks, 1);
  if (cfg.opts.ranks.size() != num_blocks)
    throw ConfigError("fit: ranks length != block count");
  if (cfg.opts.tau.size() == 1 && num_blocks > 1)
    cfg.opts.tau.assign(num_blocks, cfg.opts.tau.front());
  if (cfg.design.size() == 0) {
    cfg.design = Matrix::Ones(static_cast<Index>(num_blocks),
                              static_cast<Index>(num_blocks));
    cfg.design.diagonal().setZero();
  }
  DesignMatrix design{cfg.design};
  SchemeG scheme{cfg.scheme};

  std::vector<Vector> true_w;
  for (const auto& p : true_paths) true_w.push_back(read_tensor(p).data());

  const int num_folds = static_cast<int>(fold_paths.size());
  std::vector<std::vector<CsvRow>> per_fold(static_cast<size_t>(num_folds));
  json jfolds = json::array();
  std::vector<json> fold_json(static_cast<size_t>(num_folds));

  parallel_for(num_folds, threads, [&](int f) {
    BlockSet bs;
    for (const auto& p : fold_paths[static_cast<size_t>(f)])
      bs.blocks.push_back(Block::from_stacked(read_tensor(p)));
    if (bs.blocks.size() != num_blocks)
      throw ConfigError("fit: fold " + std::to_string(f + 1) +
                        " block count mismatch");
    preprocess(bs);
    const auto t0 = std::chrono::steady_clock::now();
    ComponentStack stack =
        extract_components(bs, design, scheme, cfg.opts, components);
    // TGCCA_DETERMINISTIC pins the one wall-clock-dependent output field so
    // that identical (config, seed) runs produce byte-identical CSVs
    const double secs =
        std::getenv("TGCCA_DETERMINISTIC") != nullptr
            ? 0.0
            : std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            t0)
                  .count();
    json jf;
    jf["fold"] = f + 1;
    jf["stages"] = static_cast<int>(stack.null_from);
    jf["criterion"] = stack.traces.front().empty()
                          ? 0.0
                          : stack.traces.front().back();
    for (int s = 0; s < components; ++s) {
      const double crit =
          stack.traces[static_cast<size_t>(s)].empty()
              ? 0.0
              : stack.traces[static_cast<size_t>(s)].back();
      for (size_t l = 0; l < num_blocks; ++l) {
        double cosine = 0.0;
        if (l < true_w.size() && s < stack.null_from) {
          Vector w =
              stack.vectors[static_cast<size_t>(s)][l].reconstruct();
          if (w.norm() > 0.0) cosine = cosine_alignment(true_w[l], w);
        }
        per_fold[static_cast<size_t>(f)].push_back(
            CsvRow{cfg.model, static_cast<int>(l + 1), f + 1, s + 1, cosine,
                   crit, secs});
      }
    }
    fold_json[static_cast<size_t>(f)] = std::move(jf);
  });

  std::vector<CsvRow> rows;  // merged deterministically in fold order
  for (auto& pf : per_fold) rows.insert(rows.end(), pf.begin(), pf.end());
  for (auto& jf : fold_json) jfolds.push_back(std::move(jf));

  const std::string csv_path = (fs::path(out_dir) / "results.csv").string();
  write_csv(csv_path, rows, /*with_summary=*/true);

  json manifest;
  manifest["version"] = kVersion;
  manifest["config"] = j;
  manifest["data_dir"] = data_dir;
  manifest["folds"] = jfolds;
  manifest["csv"] = "results.csv";
  manifest["csv_hash"] = file_hash(csv_path);
  write_text_file((fs::path(out_dir) / "run.json").string(),
                  manifest.dump(2) + "\n");
  log::info("fit: wrote %s", csv_path.c_str());
  return 0;
}

// -------------------------------------------------------------------- bench

// Explicit-path whitening: multiply by the fully assembled Kronecker product
// of the per-mode inverse square roots, streamed in column chunks so the
// p x p matrix never has to fit in memory at q = 30, d = 3.
Matrix explicit_whiten(const Matrix& x, const std::vector<Matrix>& inv_sqrt) {
  const Index p = x.cols();
  Matrix out(x.rows(), p);
  const Index chunk_cols = std::max<Index>(1, (1 << 24) / std::max<Index>(p, 1));
  std::vector<Index> dims;
  for (const auto& f : inv_sqrt) dims.push_back(f.rows());
  const Index d = static_cast<Index>(dims.size());
  Matrix wchunk(p, chunk_cols);
  for (Index j0 = 0; j0 < p; j0 += chunk_cols) {
    const Index cols = std::min(chunk_cols, p - j0);
    for (Index c = 0; c < cols; ++c) {
      Index j = j0 + c, rem = j;
      Matrix col = Matrix::Ones(1, 1);
      for (Index m = 0; m < d; ++m) {
        const Index jm = rem % dims[static_cast<size_t>(m)];
        rem /= dims[static_cast<size_t>(m)];
        col = kronecker(inv_sqrt[static_cast<size_t>(m)].col(jm), col);
      }
      wchunk.col(c) = col;
    }
    out.middleCols(j0, cols).noalias() = x * wchunk.leftCols(cols);
  }
  return out;
}

int cmd_bench(const std::string& config_path) {
  std::vector<Index> qs = {10, 20, 30};
  std::vector<Index> ds = {1, 2, 3};
  Index n = 20;
  std::uint64_t seed = 0;
  if (!config_path.empty()) {
    json j = json::parse(read_text_file(config_path));
    if (j.contains("q")) {
      qs.clear();
      for (const auto& v : j["q"]) qs.push_back(v.get<Index>());
    }
    if (j.contains("d")) {
      ds.clear();
      for (const auto& v : j["d"]) ds.push_back(v.get<Index>());
    }
    n = j.value("n", n);
    seed = j.value("seed", seed);
  }

  std::printf("q,d,p,separable_seconds,explicit_seconds,ratio,max_abs_diff\n");
  for (Index d : ds) {
    for (Index q : qs) {
      Index p = 1;
      for (Index m = 0; m < d; ++m) p *= q;
      std::mt19937_64 rng(seed + static_cast<std::uint64_t>(100 * d + q));
      std::normal_distribution<double> normal(0.0, 1.0);
      Block blk;
      blk.dims.assign(static_cast<size_t>(d), q);
      blk.x = Matrix::NullaryExpr(n, p, [&](Index, Index) { return normal(rng); });

      using Clock = std::chrono::steady_clock;
      const auto t0 = Clock::now();
      RegularizationSpec spec = estimate_separable_m(blk, 1e-3);
      WhitenResult wr = whiten_block(blk, spec);
      const double sep_s = std::chrono::duration<double>(Clock::now() - t0).count();

      const auto t1 = Clock::now();
      // the explicit path recomputes its own per-mode inverse roots so the
      // timed work covers the whole init
      std::vector<Matrix> inv_sqrt;
      for (const auto& f : spec.factors) inv_sqrt.push_back(spd_inv_sqrt(f));
      Matrix xw = explicit_whiten(blk.x, inv_sqrt);
      const double exp_s = std::chrono::duration<double>(Clock::now() - t1).count();

      double diff = 0.0;
      if (p <= 20000)  // correctness gate on sizes where both fit comfortably
        diff = (xw - wr.block.x).cwiseAbs().maxCoeff();
      std::printf("%lld,%lld,%lld,%s,%s,%s,%s\n",
                  static_cast<long long>(q), static_cast<long long>(d),
                  static_cast<long long>(p), fmt_double(sep_s).c_str(),
                  fmt_double(exp_s).c_str(),
                  fmt_double(exp_s / std::max(sep_s, 1e-12)).c_str(),
                  fmt_double(diff).c_str());
      std::fflush(stdout);
    }
  }
  return 0;
}

// --------------------------------------------------------------------- eval

int cmd_eval(const std::string& config_path, const std::string& out_dir) {
  json j = json::parse(read_text_file(config_path));
  if (!j.contains("inputs") || !j["inputs"].is_array())
    throw ConfigError("eval: config needs an inputs array of CSV paths");
  fs::create_directories(out_dir);

  // merge per-fold rows from each input, then re-derive the quantile summary
  std::vector<CsvRow> rows;
  for (const auto& jp : j["inputs"]) {
    std::istringstream is(read_text_file(jp.get<std::string>()));
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
      std::istringstream ls(line);
      CsvRow r;
      std::string field;
      std::getline(ls, r.model, ',');
      std::getline(ls, field, ',');
      if (field == "median" || field.rfind("q", 0) == 0) continue;
      r.block = std::stoi(field);
      std::getline(ls, field, ',');
      if (field == "median" || field.rfind("q", 0) == 0) continue;
      r.fold = std::stoi(field);
      std::getline(ls, field, ',');
      r.component = std::stoi(field);
      std::getline(ls, field, ',');
      r.cosine = std::stod(field);
      std::getline(ls, field, ',');
      r.criterion = std::stod(field);
      std::getline(ls, field, ',');
      r.seconds = std::stod(field);
      rows.push_back(std::move(r));
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const CsvRow& a, const CsvRow& b) {
    return std::tie(a.model, a.block, a.component, a.fold) <
           std::tie(b.model, b.block, b.component, b.fold);
  });
  write_csv((fs::path(out_dir) / "summary.csv").string(), rows,
            /*with_summary=*/true);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tensor generalized canonical correlation analysis toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config, out = ".", data;
  int threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  std::optional<std::uint64_t> seed;

  auto add_common = [&](CLI::App* sub, bool need_out) {
    sub->add_option("--config", config, "JSON config path")->required();
    if (need_out) sub->add_option("--out", out, "output directory");
    sub->add_option("--threads", threads, "worker threads");
    sub->add_option("--seed", seed, "seed override");
  };

  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
  add_common(sim, true);
  auto* fit = app.add_subcommand("fit", "fit the model on a dataset");
  add_common(fit, true);
  fit->add_option("--data", data, "dataset directory (with manifest.json)");
  auto* bench = app.add_subcommand("bench",
                                   "compare whitening implementations");
  bench->add_option("--config", config, "JSON config path (optional)");
  auto* eval = app.add_subcommand("eval", "summarize result CSVs");
  add_common(eval, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(config, out, threads, seed);
    if (fit->parsed()) return cmd_fit(config, data, out, threads, seed);
    if (bench->parsed()) return cmd_bench(config);
    if (eval->parsed()) return cmd_eval(config, out);
  } catch (const ConfigError& e) {
    log::error("%s", e.what());
    return 2;
  } catch (const nlohmann::json::exception& e) {
    log::error("config: %s", e.what());
    return 2;
  } catch (const NumericalError& e) {
    log::error("%s", e.what());
    return 3;
  }
  return 0;
}
