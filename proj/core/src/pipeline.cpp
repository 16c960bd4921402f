#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "crowdlab/ambiguity.hpp"
#include "crowdlab/chain.hpp"
#include "crowdlab/crf.hpp"
#include "crowdlab/digest.hpp"
#include "crowdlab/error.hpp"
#include "crowdlab/evaluate.hpp"
#include "crowdlab/pipeline.hpp"
#include "crowdlab/simulate.hpp"
#include "crowdlab/version.hpp"
#include "tsv.hpp"

namespace crowdlab {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::vector<std::size_t> sequence_lengths(const Corpus& corpus) {
  std::vector<std::size_t> out;
  out.reserve(corpus.sequences.size());
  for (const auto& seq : corpus.sequences) out.push_back(seq.tokens.size());
  return out;
}

std::vector<int> sequence_lengths_int(const Corpus& corpus) {
  std::vector<int> out;
  out.reserve(corpus.sequences.size());
  for (const auto& seq : corpus.sequences) out.push_back(static_cast<int>(seq.tokens.size()));
  return out;
}

bool has_double_gold(const Corpus& corpus) {
  for (const auto& seq : corpus.sequences)
    for (const auto& tok : seq.tokens)
      if (tok.doubly_gold()) return true;
  return false;
}

struct Orchestrator {
  const RunConfig& config;
  std::ostream& log;
  fs::path out_dir;
  fs::path manifest_path;
  ordered_json manifest;
  RunOutcome outcome;

  Orchestrator(const RunConfig& c, std::ostream& l) : config(c), log(l), out_dir(c.out_dir) {
    fs::create_directories(out_dir);
    manifest_path = out_dir / "manifest.json";
    if (fs::exists(manifest_path)) {
      try {
        std::ifstream in(manifest_path);
        in >> manifest;
      } catch (const std::exception&) {
        manifest = ordered_json::object();  // unreadable manifest: recompute
      }
    }
    if (!manifest.is_object()) manifest = ordered_json::object();
  }

  fs::path artifact(const std::string& name) const { return out_dir / name; }

  void save_manifest() {
    manifest["tool_version"] = kVersion;
    manifest["config_digest"] = sha256_hex(config.canonical());
    std::ofstream os(manifest_path, std::ios::binary | std::ios::trunc);
    os << manifest.dump(2) << '\n';
    if (!os) throw Error("cannot write manifest: " + manifest_path.string());
  }

  ordered_json digest_inputs(const std::string& stage,
                             const std::vector<std::pair<std::string, fs::path>>& inputs) {
    auto out = ordered_json::object();
    for (const auto& [label, path] : inputs) {
      if (!fs::exists(path))
        throw Error(stage + " stage failed: missing input " + path.string());
      out[label] = sha256_file(path.string());
    }
    return out;
  }

  bool fresh(const std::string& name, const ordered_json& inputs,
             const std::string& params_digest) const {
    if (!manifest.contains("stages") || !manifest["stages"].contains(name)) return false;
    const auto& entry = manifest["stages"][name];
    if (entry.value("params", std::string()) != params_digest) return false;
    if (!entry.contains("inputs") || entry["inputs"] != inputs) return false;
    if (!entry.contains("outputs") || !entry["outputs"].is_object() ||
        entry["outputs"].empty())
      return false;
    for (const auto& [fname, digest] : entry["outputs"].items()) {
      const auto path = out_dir / fname;
      if (!fs::exists(path)) return false;
      if (sha256_file(path.string()) != digest.get<std::string>()) return false;
    }
    return true;
  }

  // `body` returns the files it wrote, out_dir-relative.
  void stage(const std::string& name, const std::string& params,
             const std::vector<std::pair<std::string, fs::path>>& inputs,
             const std::function<std::vector<std::string>()>& body) {
    const auto inputs_json = digest_inputs(name, inputs);
    const auto params_digest = sha256_hex(params);
    if (fresh(name, inputs_json, params_digest)) {
      log << name << ": cached\n";
      outcome.stages.push_back({name, true});
      return;
    }
    log << name << ": running\n";
    std::vector<std::string> written;
    try {
      written = body();
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(name + " stage failed: " + e.what());
    }
    auto outputs = ordered_json::object();
    for (const auto& fname : written) outputs[fname] = sha256_file(artifact(fname).string());
    manifest["stages"][name] = {
        {"inputs", inputs_json}, {"params", params_digest}, {"outputs", outputs}};
    save_manifest();
    outcome.stages.push_back({name, false});
  }
};

Hyperparams make_hyper(const RunConfig& config, int num_labels, int num_clusters) {
  auto hyper = Hyperparams::defaults(num_labels, num_clusters);
  std::fill(hyper.lambda.begin(), hyper.lambda.end(), config.lambda);
  for (std::size_t t = 0; t < hyper.alpha.rows(); ++t)
    for (std::size_t s = 0; s < hyper.alpha.cols(); ++s)
      hyper.alpha(t, s) = t == s ? config.alpha_diag : config.alpha_off;
  hyper.eps_nu = config.eps_nu;
  hyper.eps_gamma = config.eps_gamma;
  return hyper;
}

ChainSchedule make_schedule(const RunConfig& config) {
  ChainSchedule schedule;
  schedule.burn_in = config.burn_in;
  schedule.num_samples = config.samples;
  schedule.thin = config.thin;
  schedule.mh_inner_steps = config.mh_steps;
  schedule.mh_mode = config.corrected_mh ? MhMode::kCorrected : MhMode::kPlain;
  return schedule;
}

CrfConfig make_crf_config(const RunConfig& config) {
  CrfConfig cc;
  cc.cost_sensitive = config.mode == "cost";
  cc.l2 = config.l2;
  cc.max_epochs = config.max_epochs;
  cc.grad_tolerance = config.grad_tolerance;
  cc.transitions = config.transitions;
  return cc;
}

std::string chain_params(const RunConfig& config) {
  std::ostringstream p;
  p.precision(17);
  p << "seed=" << *config.seed << ";clusters=" << config.clusters << ";select="
    << config.select_min << ':' << config.select_max << ";burn_in=" << config.burn_in
    << ";samples=" << config.samples << ";thin=" << config.thin
    << ";mh_steps=" << config.mh_steps << ";corrected=" << config.corrected_mh
    << ";lambda=" << config.lambda << ";alpha=" << config.alpha_diag << ','
    << config.alpha_off << ";eps=" << config.eps_nu << ',' << config.eps_gamma;
  return p.str();
}

void write_json(const ordered_json& j, const fs::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os << j.dump(2) << '\n';
  if (!os) throw Error("cannot write " + path.string());
}

ordered_json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read " + path.string());
  ordered_json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw Error("bad JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

ordered_json pair_listing(const std::vector<LabelPair>& pairs, const LabelSet& labels) {
  auto out = ordered_json::array();
  for (const auto& p : pairs)
    out.push_back({{"first", labels.name(p.first)},
                   {"second", labels.name(p.second)},
                   {"value", p.value}});
  return out;
}

// Gold-pair confusability of a doubly-labeled corpus: primary gold as truth,
// candidate set = the gold pair.
Matrix gold_confusability(const Corpus& corpus) {
  std::vector<int> truth;
  std::vector<std::vector<int>> cands;
  for (const auto& seq : corpus.sequences)
    for (const auto& tok : seq.tokens) {
      truth.push_back(tok.gold[0]);
      if (tok.doubly_gold())
        cands.push_back({tok.gold[0], tok.gold[1]});
      else
        cands.push_back({tok.gold[0]});
    }
  return build_cf(cands, truth, corpus.labels.size());
}

}  // namespace

RunOutcome run_pipeline(const RunConfig& config, std::ostream& log) {
  validate_run_config(config);
  Orchestrator orch(config, log);

  const Corpus corpus = load_corpus(config.corpus);
  const auto lengths = sequence_lengths(corpus);
  const int T = corpus.labels.size();

  orch.stage("simulate",
             "seed=" + std::to_string(*config.seed) + ";groups=" + config.groups +
                 ";ranges=" + config.ranges,
             {{"corpus", config.corpus}}, [&]() -> std::vector<std::string> {
               const auto plan = make_plan(parse_group_counts(config.groups),
                                           parse_precision_ranges(config.ranges), *config.seed);
               const auto sim = simulate(corpus, plan);
               write_crowd(sim.crowd, corpus.labels, orch.artifact("crowd.tsv").string());
               write_precisions(sim.precisions, orch.artifact("precisions.tsv").string());
               return {"crowd.tsv", "precisions.tsv"};
             });

  orch.stage("aggregate", chain_params(config),
             {{"corpus", config.corpus}, {"crowd.tsv", orch.artifact("crowd.tsv")}},
             [&]() -> std::vector<std::string> {
               const auto crowd =
                   load_crowd(orch.artifact("crowd.tsv").string(), corpus, corpus.labels);
               const auto schedule = make_schedule(config);
               AggregationResult result;
               ordered_json diag;
               if (config.clusters > 0) {
                 result = run_chain(crowd, make_hyper(config, T, config.clusters), schedule,
                                    *config.seed);
                 diag["num_clusters"] = config.clusters;
                 diag["selected_by_bic"] = false;
               } else {
                 auto sel = select_model(crowd, make_hyper(config, T, config.select_min),
                                         config.select_min, config.select_max, schedule,
                                         *config.seed);
                 result = std::move(sel.result);
                 diag["num_clusters"] = sel.chosen;
                 diag["selected_by_bic"] = true;
                 auto bic = ordered_json::object();
                 for (std::size_t k = 0; k < sel.candidates.size(); ++k)
                   bic[std::to_string(sel.candidates[k])] = sel.bic[k];
                 diag["bic"] = bic;
               }
               diag["reliable_cluster"] = result.reliable_cluster;
               diag["cluster_empty"] = result.cluster_empty;
               diag["beta_acceptance"] = result.diagnostics.beta_acceptance;
               diag["eta_acceptance"] = result.diagnostics.eta_acceptance;
               diag["sweeps"] = result.diagnostics.sweeps;
               diag["retained_samples"] = result.diagnostics.retained_samples;
               diag["log_likelihood"] = result.diagnostics.log_likelihood;

               std::vector<std::string> written;
               write_labels(corpus, result.truth, corpus.labels,
                            orch.artifact("zhat.tsv").string());
               written.push_back("zhat.tsv");
               write_clusters(result.cluster, orch.artifact("clusters.tsv").string());
               written.push_back("clusters.tsv");
               for (std::size_t c = 0; c < result.confusion.size(); ++c) {
                 const auto name = "M_" + std::to_string(c) + ".tsv";
                 write_cf(result.confusion[c], corpus.labels, orch.artifact(name).string());
                 written.push_back(name);
               }
               write_json(diag, orch.artifact("diagnostics.json"));
               written.push_back("diagnostics.json");
               return written;
             });

  {
    std::ostringstream params;
    params.precision(17);
    params << "p=" << config.flag_fraction << ";normalize=" << config.normalize;
    orch.stage("ambiguity", params.str(),
               {{"crowd.tsv", orch.artifact("crowd.tsv")},
                {"zhat.tsv", orch.artifact("zhat.tsv")},
                {"clusters.tsv", orch.artifact("clusters.tsv")},
                {"diagnostics.json", orch.artifact("diagnostics.json")}},
               [&]() -> std::vector<std::string> {
                 const auto crowd =
                     load_crowd(orch.artifact("crowd.tsv").string(), corpus, corpus.labels);
                 LabelSet labels = corpus.labels;
                 const auto truth =
                     load_labels(orch.artifact("zhat.tsv").string(), corpus, labels);
                 const auto cluster = load_clusters(orch.artifact("clusters.tsv").string());
                 const auto diag = read_json(orch.artifact("diagnostics.json"));
                 const int reliable = diag.at("reliable_cluster").get<int>();
                 AmbiguityConfig acfg;
                 acfg.flag_fraction = config.flag_fraction;
                 acfg.normalize = config.normalize;
                 const auto result = analyze_ambiguity(crowd, lengths, cluster, reliable, truth,
                                                       labels.size(), acfg);
                 write_mu(result, lengths, orch.artifact("mu.tsv").string());
                 write_flagged(result, lengths, orch.artifact("flagged.tsv").string());
                 write_candidates(result, lengths, labels,
                                  orch.artifact("candidates.tsv").string());
                 write_cf(result.cf, labels, orch.artifact("cf.tsv").string());
                 return {"mu.tsv", "flagged.tsv", "candidates.tsv", "cf.tsv"};
               });
  }

  {
    std::ostringstream params;
    params.precision(17);
    const CrfConfig cc = make_crf_config(config);
    params << "mode=" << config.mode << ";l2=" << cc.l2 << ";max_epochs=" << cc.max_epochs
           << ";grad_tolerance=" << cc.grad_tolerance << ";transitions=" << cc.transitions
           << ";window=" << cc.window << ";affix=" << cc.affix_len;
    std::vector<std::pair<std::string, fs::path>> inputs = {
        {"corpus", config.corpus}, {"zhat.tsv", orch.artifact("zhat.tsv")}};
    if (cc.cost_sensitive) inputs.emplace_back("cf.tsv", orch.artifact("cf.tsv"));
    orch.stage("train", params.str(), inputs, [&]() -> std::vector<std::string> {
      LabelSet labels = corpus.labels;
      const auto truth = load_labels(orch.artifact("zhat.tsv").string(), corpus, labels);
      auto model = CrfModel::make(labels, FeatureMap(), cc);
      const auto encoded = encode_sequences(corpus, truth, model, true);
      Matrix cost_table;
      if (cc.cost_sensitive) {
        const auto cf = load_cf(orch.artifact("cf.tsv").string(), labels);
        cost_table = make_cost_table(cf);
      }
      const auto report =
          train_crf(model, encoded, cc.cost_sensitive ? &cost_table : nullptr);
      save_model(model, orch.artifact("model.bin").string());
      ordered_json tj;
      tj["iterations"] = report.iterations;
      tj["evaluations"] = report.evaluations;
      tj["objective"] = report.objective;
      tj["grad_inf_norm"] = report.grad_inf_norm;
      tj["converged"] = report.converged;
      write_json(tj, orch.artifact("train.json"));
      return {"model.bin", "train.json"};
    });
  }

  const bool double_gold = has_double_gold(corpus);
  if (config.test_corpus.empty() && !double_gold) return orch.outcome;

  if (!config.test_corpus.empty()) {
    orch.stage("predict", "",
               {{"model.bin", orch.artifact("model.bin")},
                {"test_corpus", config.test_corpus}},
               [&]() -> std::vector<std::string> {
                 auto model = load_model(orch.artifact("model.bin").string());
                 const auto test = load_corpus(config.test_corpus);
                 const auto preds = predict_labels(model, test);
                 write_labels(test, preds, model.labels, orch.artifact("pred.tsv").string());
                 return {"pred.tsv"};
               });
  }

  {
    std::vector<std::pair<std::string, fs::path>> inputs;
    if (!config.test_corpus.empty()) {
      inputs.emplace_back("pred.tsv", orch.artifact("pred.tsv"));
      inputs.emplace_back("test_corpus", config.test_corpus);
    }
    if (double_gold) {
      inputs.emplace_back("corpus", config.corpus);
      inputs.emplace_back("flagged.tsv", orch.artifact("flagged.tsv"));
      inputs.emplace_back("candidates.tsv", orch.artifact("candidates.tsv"));
      inputs.emplace_back("cf.tsv", orch.artifact("cf.tsv"));
    }
    orch.stage("evaluate", "", inputs, [&]() -> std::vector<std::string> {
      ordered_json report;
      if (!config.test_corpus.empty()) {
        const auto test = load_corpus(config.test_corpus);
        LabelSet eval_labels = test.labels;
        const auto pred = load_labels(orch.artifact("pred.tsv").string(), test, eval_labels);
        std::vector<int> gold;
        for (const auto& seq : test.sequences)
          for (const auto& tok : seq.tokens) gold.push_back(tok.gold[0]);
        report["token_accuracy"] = token_accuracy(pred, gold);
        const auto span = span_f1(pred, gold, sequence_lengths_int(test), eval_labels);
        report["span_precision"] = span.precision;
        report["span_recall"] = span.recall;
        report["span_f1"] = span.f1;
        report["predicted_spans"] = span.predicted_spans;
        report["gold_spans"] = span.gold_spans;
        report["matched_spans"] = span.matched;
      }
      if (double_gold) {
        auto check_coord = [&](int s, int j) {
          if (s < 0 || static_cast<std::size_t>(s) >= corpus.sequences.size() || j < 0 ||
              static_cast<std::size_t>(j) >=
                  corpus.sequences[static_cast<std::size_t>(s)].tokens.size())
            throw Error("token coordinate out of range: " + std::to_string(s) + ":" +
                        std::to_string(j));
        };
        const auto flagged_pairs = load_flagged(orch.artifact("flagged.tsv").string());
        std::vector<int> flagged;
        for (const auto& [s, j] : flagged_pairs) {
          check_coord(s, j);
          flagged.push_back(static_cast<int>(corpus.flat_index(
              static_cast<std::size_t>(s), static_cast<std::size_t>(j))));
        }
        LabelSet labels = corpus.labels;
        const auto cand_rows =
            load_candidates(orch.artifact("candidates.tsv").string(), labels);
        std::vector<std::vector<int>> cands(corpus.token_count());
        for (const auto& [s, j, list] : cand_rows) {
          check_coord(s, j);
          cands[corpus.flat_index(static_cast<std::size_t>(s),
                                  static_cast<std::size_t>(j))] = list;
        }
        const auto amb = score_ambiguity(corpus, flagged, cands);
        report["flagged_recall"] = amb.flagged_recall;
        report["candidate_recall"] = amb.candidate_recall;
        report["gold_ambiguous"] = amb.gold_ambiguous;
        report["candidate_semantics"] = "superset";

        const auto learned = load_cf(orch.artifact("cf.tsv").string(), labels);
        const auto gold_cf = gold_confusability(corpus);
        const auto cmp = compare_confusability(learned, gold_cf, 5);
        report["cf_mean_abs_diff"] = cmp.mean_abs_diff;
        report["cf_top_learned"] = pair_listing(cmp.top_left, labels);
        report["cf_top_gold"] = pair_listing(cmp.top_right, labels);
      }
      write_json(report, orch.artifact("report.json"));
      return {"report.json"};
    });
  }

  return orch.outcome;
}

}  // namespace crowdlab
