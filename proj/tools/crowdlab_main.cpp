#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crowdlab/ambiguity.hpp"
#include "crowdlab/chain.hpp"
#include "crowdlab/config.hpp"
#include "crowdlab/crf.hpp"
#include "crowdlab/error.hpp"
#include "crowdlab/evaluate.hpp"
#include "crowdlab/pipeline.hpp"
#include "crowdlab/simulate.hpp"
#include "crowdlab/version.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using namespace crowdlab;

namespace {

std::vector<std::size_t> lengths_of(const Corpus& corpus) {
  std::vector<std::size_t> out;
  for (const auto& seq : corpus.sequences) out.push_back(seq.tokens.size());
  return out;
}

std::vector<int> lengths_int(const Corpus& corpus) {
  std::vector<int> out;
  for (const auto& seq : corpus.sequences) out.push_back(static_cast<int>(seq.tokens.size()));
  return out;
}

void write_json_file(const ordered_json& j, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os << j.dump(2) << '\n';
  if (!os) throw Error("cannot write " + path);
}

std::pair<int, int> parse_cluster_range(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw Error("cluster range wants min:max, got " + text);
  return {std::stoi(text.substr(0, colon)), std::stoi(text.substr(colon + 1))};
}

Matrix gold_pair_cf(const Corpus& corpus) {
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

ordered_json pair_json(const std::vector<LabelPair>& pairs, const LabelSet& labels) {
  auto out = ordered_json::array();
  for (const auto& p : pairs)
    out.push_back({{"first", labels.name(p.first)},
                   {"second", labels.name(p.second)},
                   {"value", p.value}});
  return out;
}

int run_simulate(const std::string& corpus_path, const std::string& groups,
                 const std::string& ranges, std::uint64_t seed, const std::string& out) {
  const auto corpus = load_corpus(corpus_path);
  const auto plan = make_plan(parse_group_counts(groups), parse_precision_ranges(ranges), seed);
  const auto sim = simulate(corpus, plan);
  write_crowd(sim.crowd, corpus.labels, out);
  const auto precision_path = (fs::path(out).parent_path() / "precisions.tsv").string();
  write_precisions(sim.precisions, precision_path);
  std::cout << "wrote " << out << " (" << sim.crowd.size() << " annotations, "
            << sim.precisions.size() << " annotators)\n"
            << "wrote " << precision_path << '\n';
  return 0;
}

int run_aggregate(const std::string& corpus_path, const std::string& crowd_path, int clusters,
                  const std::string& select, const ChainSchedule& schedule, double lambda,
                  double alpha_diag, double alpha_off, double eps_nu, double eps_gamma,
                  std::uint64_t seed, const std::string& out_dir) {
  const auto corpus = load_corpus(corpus_path);
  const auto crowd = load_crowd(crowd_path, corpus, corpus.labels);
  const int T = corpus.labels.size();
  fs::create_directories(out_dir);

  auto hyper_for = [&](int c) {
    auto h = Hyperparams::defaults(T, c);
    std::fill(h.lambda.begin(), h.lambda.end(), lambda);
    for (std::size_t t = 0; t < h.alpha.rows(); ++t)
      for (std::size_t s = 0; s < h.alpha.cols(); ++s)
        h.alpha(t, s) = t == s ? alpha_diag : alpha_off;
    h.eps_nu = eps_nu;
    h.eps_gamma = eps_gamma;
    return h;
  };

  AggregationResult result;
  ordered_json diag;
  if (clusters > 0) {
    result = run_chain(crowd, hyper_for(clusters), schedule, seed);
    diag["num_clusters"] = clusters;
    diag["selected_by_bic"] = false;
  } else {
    const auto [lo, hi] = parse_cluster_range(select);
    auto sel = select_model(crowd, hyper_for(lo), lo, hi, schedule, seed);
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

  const fs::path out(out_dir);
  write_labels(corpus, result.truth, corpus.labels, (out / "zhat.tsv").string());
  write_clusters(result.cluster, (out / "clusters.tsv").string());
  for (std::size_t c = 0; c < result.confusion.size(); ++c)
    write_cf(result.confusion[c], corpus.labels,
             (out / ("M_" + std::to_string(c) + ".tsv")).string());
  write_json_file(diag, (out / "diagnostics.json").string());
  std::cout << "aggregated " << crowd.size() << " annotations into " << out_dir << " ("
            << diag["num_clusters"] << " clusters, reliable " << result.reliable_cluster
            << ")\n";
  return 0;
}

int run_ambiguity(const std::string& corpus_path, const std::string& crowd_path,
                  const std::string& clusters_path, int reliable, const std::string& zhat_path,
                  double p, bool normalize, const std::string& out_dir) {
  // The aggregated-labels file doubles as the corpus when none is given: it
  // carries surfaces and sequence breaks. Its inventory must then cover every
  // label in the crowd file.
  const Corpus corpus =
      corpus_path.empty() ? load_corpus(zhat_path) : load_corpus(corpus_path);
  LabelSet labels = corpus.labels;
  const auto truth = load_labels(zhat_path, corpus, labels);
  const auto crowd = load_crowd(crowd_path, corpus, labels);
  const auto cluster = load_clusters(clusters_path);

  AmbiguityConfig acfg;
  acfg.flag_fraction = p;
  acfg.normalize = normalize;
  const auto lengths = lengths_of(corpus);
  const auto result =
      analyze_ambiguity(crowd, lengths, cluster, reliable, truth, labels.size(), acfg);

  fs::create_directories(out_dir);
  const fs::path out(out_dir);
  write_mu(result, lengths, (out / "mu.tsv").string());
  write_flagged(result, lengths, (out / "flagged.tsv").string());
  write_candidates(result, lengths, labels, (out / "candidates.tsv").string());
  write_cf(result.cf, labels, (out / "cf.tsv").string());
  std::cout << "flagged " << result.flagged.size() << " of " << result.eligible_tokens
            << " eligible tokens into " << out_dir << '\n';
  return 0;
}

int run_train(const std::string& corpus_path, const std::string& labels_path,
              const std::string& cf_path, const std::string& mode, double l2, int max_epochs,
              double grad_tolerance, bool transitions, const std::string& model_path) {
  if (mode != "cost" && mode != "cll") throw Error("mode must be cost or cll, got: " + mode);
  const auto corpus = load_corpus(corpus_path);
  LabelSet labels = corpus.labels;
  const auto truth = load_labels(labels_path, corpus, labels);

  CrfConfig cc;
  cc.cost_sensitive = mode == "cost";
  cc.l2 = l2;
  cc.max_epochs = max_epochs;
  cc.grad_tolerance = grad_tolerance;
  cc.transitions = transitions;
  if (cc.cost_sensitive && cf_path.empty())
    throw Error("cost mode needs --cf; pass --mode cll to train without one");

  auto model = CrfModel::make(labels, FeatureMap(), cc);
  const auto encoded = encode_sequences(corpus, truth, model, true);
  Matrix cost_table;
  if (cc.cost_sensitive) cost_table = make_cost_table(load_cf(cf_path, labels));
  const auto report = train_crf(model, encoded, cc.cost_sensitive ? &cost_table : nullptr);
  save_model(model, model_path);
  std::cout << "wrote " << model_path << " (" << model.num_weights() << " weights, "
            << report.iterations << " iterations, grad " << report.grad_inf_norm
            << (report.converged ? ", converged" : ", iteration limit") << ")\n";
  return 0;
}

int run_predict(const std::string& model_path, const std::string& corpus_path,
                const std::string& out) {
  auto model = load_model(model_path);
  const auto corpus = load_corpus(corpus_path);
  const auto preds = predict_labels(model, corpus);
  write_labels(corpus, preds, model.labels, out);
  std::cout << "wrote " << out << " (" << preds.size() << " tokens)\n";
  return 0;
}

int run_evaluate(const std::string& pred_path, const std::string& gold_path, bool gold2,
                 const std::string& flagged_path, const std::string& candidates_path,
                 const std::string& cf_path, const std::string& report_path) {
  const auto corpus = load_corpus(gold_path);
  LabelSet labels = corpus.labels;
  const auto pred = load_labels(pred_path, corpus, labels);
  std::vector<int> gold;
  for (const auto& seq : corpus.sequences)
    for (const auto& tok : seq.tokens) gold.push_back(tok.gold[0]);

  ordered_json report;
  report["token_accuracy"] = token_accuracy(pred, gold);
  const auto span = span_f1(pred, gold, lengths_int(corpus), labels);
  report["span_precision"] = span.precision;
  report["span_recall"] = span.recall;
  report["span_f1"] = span.f1;
  report["predicted_spans"] = span.predicted_spans;
  report["gold_spans"] = span.gold_spans;
  report["matched_spans"] = span.matched;

  if (gold2) {
    if (flagged_path.empty() || candidates_path.empty())
      throw Error("--gold2 needs --flagged and --candidates");
    const auto flagged_pairs = load_flagged(flagged_path);
    std::vector<int> flagged;
    for (const auto& [s, j] : flagged_pairs)
      flagged.push_back(static_cast<int>(
          corpus.flat_index(static_cast<std::size_t>(s), static_cast<std::size_t>(j))));
    const auto cand_rows = load_candidates(candidates_path, labels);
    std::vector<std::vector<int>> cands(corpus.token_count());
    for (const auto& [s, j, list] : cand_rows)
      cands[corpus.flat_index(static_cast<std::size_t>(s), static_cast<std::size_t>(j))] =
          list;
    const auto amb = score_ambiguity(corpus, flagged, cands);
    report["flagged_recall"] = amb.flagged_recall;
    report["candidate_recall"] = amb.candidate_recall;
    report["gold_ambiguous"] = amb.gold_ambiguous;
    report["candidate_semantics"] = "superset";
    if (!cf_path.empty()) {
      const auto learned = load_cf(cf_path, labels);
      const auto cmp = compare_confusability(learned, gold_pair_cf(corpus), 5);
      report["cf_mean_abs_diff"] = cmp.mean_abs_diff;
      report["cf_top_learned"] = pair_json(cmp.top_left, labels);
      report["cf_top_gold"] = pair_json(cmp.top_right, labels);
    }
  }

  write_json_file(report, report_path);
  std::cout << "wrote " << report_path << " (token accuracy "
            << report["token_accuracy"] << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Crowd annotation aggregation, ambiguity extraction, and sequence labeling"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  try {
    // simulate
    auto* sim = app.add_subcommand("simulate", "Generate crowd annotations from a gold corpus");
    std::string sim_corpus, sim_groups = "8,4,3", sim_ranges = "0.9:0.7,0.7:0.4,0.4:0.1";
    std::string sim_out;
    std::uint64_t sim_seed = 0;
    sim->add_option("--corpus", sim_corpus, "Gold corpus TSV")->required();
    sim->add_option("--groups", sim_groups, "Annotator counts per group, e.g. 8,4,3");
    sim->add_option("--ranges", sim_ranges, "Precision range per group, e.g. 0.9:0.7,...");
    sim->add_option("--seed", sim_seed, "RNG seed")->required();
    sim->add_option("--out", sim_out, "Output crowd TSV; precisions.tsv lands alongside")
        ->required();

    // aggregate
    auto* agg = app.add_subcommand("aggregate", "Infer truth and annotator clusters");
    std::string agg_corpus, agg_crowd, agg_out, agg_select = "2:5";
    int agg_clusters = 0;
    ChainSchedule schedule;
    bool agg_corrected = false;
    double agg_lambda = 2.0, agg_adiag = 0.7, agg_aoff = 0.3, agg_enu = 1.0, agg_egamma = 1.0;
    std::uint64_t agg_seed = 0;
    agg->add_option("--corpus", agg_corpus, "Corpus TSV (layout and label inventory)")
        ->required();
    agg->add_option("--crowd", agg_crowd, "Crowd annotations TSV")->required();
    auto* fixed = agg->add_option("--clusters", agg_clusters, "Fixed cluster count");
    agg->add_option("--select-clusters", agg_select, "BIC selection range min:max")
        ->excludes(fixed);
    agg->add_option("--burn-in", schedule.burn_in, "Burn-in sweeps");
    agg->add_option("--samples", schedule.num_samples, "Retained samples");
    agg->add_option("--thin", schedule.thin, "Thinning interval");
    agg->add_option("--mh-steps", schedule.mh_inner_steps, "Inner MH steps per refresh");
    agg->add_flag("--corrected-mh", agg_corrected, "Hastings-corrected MH proposals");
    agg->add_option("--lambda", agg_lambda, "Concentration rate hyperparameter");
    agg->add_option("--alpha-diag", agg_adiag, "Confusion prior diagonal");
    agg->add_option("--alpha-off", agg_aoff, "Confusion prior off-diagonal");
    agg->add_option("--eps-nu", agg_enu, "Cluster proportion prior mass");
    agg->add_option("--eps-gamma", agg_egamma, "Truth proportion prior mass");
    agg->add_option("--seed", agg_seed, "RNG seed")->required();
    agg->add_option("--out-dir", agg_out, "Output directory")->required();

    // ambiguity
    auto* amb = app.add_subcommand("ambiguity", "Extract token ambiguity and confusability");
    std::string amb_corpus, amb_crowd, amb_clusters, amb_zhat, amb_out;
    int amb_reliable = 0;
    double amb_p = 0.10;
    bool amb_no_normalize = false;
    amb->add_option("--corpus", amb_corpus, "Corpus TSV (defaults to the --zhat file layout)");
    amb->add_option("--crowd", amb_crowd, "Crowd annotations TSV")->required();
    amb->add_option("--clusters", amb_clusters, "Cluster assignment TSV")->required();
    amb->add_option("--reliable-cluster", amb_reliable, "Reliable cluster id")->required();
    amb->add_option("--zhat", amb_zhat, "Aggregated labels TSV")->required();
    amb->add_option("-p,--flag-fraction", amb_p, "Fraction of eligible tokens to flag");
    amb->add_flag("--no-normalize", amb_no_normalize,
                  "Rank raw token scores without per-sequence normalization");
    amb->add_option("--out-dir", amb_out, "Output directory")->required();

    // train
    auto* tr = app.add_subcommand("train", "Train the sequence labeler");
    std::string tr_corpus, tr_labels, tr_cf, tr_mode = "cost", tr_model;
    double tr_l2 = 1.0, tr_tol = 1e-4;
    int tr_epochs = 200;
    bool tr_no_transitions = false;
    std::uint64_t tr_seed = 0;
    tr->add_option("--corpus", tr_corpus, "Corpus TSV with surfaces")->required();
    tr->add_option("--labels", tr_labels, "Training labels TSV (aggregated truth)")->required();
    tr->add_option("--cf", tr_cf, "Confusability TSV (cost mode)");
    tr->add_option("--mode", tr_mode, "cost | cll");
    tr->add_option("--l2", tr_l2, "L2 penalty strength");
    tr->add_option("--max-epochs", tr_epochs, "Optimizer iteration cap");
    tr->add_option("--grad-tolerance", tr_tol, "Gradient infinity-norm stop");
    tr->add_flag("--no-transitions", tr_no_transitions, "Drop transition weights");
    tr->add_option("--seed", tr_seed, "Accepted for interface stability; training is deterministic");
    tr->add_option("--model", tr_model, "Output model file")->required();

    // predict
    auto* pr = app.add_subcommand("predict", "Label a corpus with a trained model");
    std::string pr_model, pr_corpus, pr_out;
    pr->add_option("--model", pr_model, "Model file")->required();
    pr->add_option("--corpus", pr_corpus, "Corpus TSV")->required();
    pr->add_option("--out", pr_out, "Output labels TSV")->required();

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Score predictions and ambiguity artifacts");
    std::string ev_pred, ev_gold, ev_flagged, ev_candidates, ev_cf, ev_report;
    bool ev_gold2 = false;
    ev->add_option("--pred", ev_pred, "Predicted labels TSV")->required();
    ev->add_option("--gold", ev_gold, "Gold corpus TSV")->required();
    ev->add_flag("--gold2", ev_gold2, "Score flags/candidates against double gold labels");
    ev->add_option("--flagged", ev_flagged, "Flagged tokens TSV");
    ev->add_option("--candidates", ev_candidates, "Candidate labels TSV");
    ev->add_option("--cf", ev_cf, "Learned confusability TSV to compare against gold pairs");
    ev->add_option("--report", ev_report, "Output report JSON")->required();

    // run
    auto* rn = app.add_subcommand("run", "Run the full pipeline from a config file");
    std::string rn_config;
    std::vector<std::string> rn_sets;
    rn->add_option("--config", rn_config, "Flat key=value config file")->required();
    rn->add_option("--set", rn_sets, "Override, key=value (repeatable)");

    CLI11_PARSE(app, argc, argv);

    if (sim->parsed())
      return run_simulate(sim_corpus, sim_groups, sim_ranges, sim_seed, sim_out);
    if (agg->parsed()) {
      schedule.mh_mode = agg_corrected ? MhMode::kCorrected : MhMode::kPlain;
      return run_aggregate(agg_corpus, agg_crowd, agg_clusters, agg_select, schedule,
                           agg_lambda, agg_adiag, agg_aoff, agg_enu, agg_egamma, agg_seed,
                           agg_out);
    }
    if (amb->parsed())
      return run_ambiguity(amb_corpus, amb_crowd, amb_clusters, amb_reliable, amb_zhat, amb_p,
                           !amb_no_normalize, amb_out);
    if (tr->parsed())
      return run_train(tr_corpus, tr_labels, tr_cf, tr_mode, tr_l2, tr_epochs, tr_tol,
                       !tr_no_transitions, tr_model);
    if (pr->parsed()) return run_predict(pr_model, pr_corpus, pr_out);
    if (ev->parsed())
      return run_evaluate(ev_pred, ev_gold, ev_gold2, ev_flagged, ev_candidates, ev_cf,
                          ev_report);
    if (rn->parsed()) {
      auto config = load_run_config(rn_config);
      for (const auto& s : rn_sets) apply_config_override(config, s);
      const auto outcome = run_pipeline(config, std::cout);
      for (const auto& st : outcome.stages)
        std::cout << st.name << ": " << (st.cached ? "cached" : "recomputed") << '\n';
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
