// dalta: domain-adapted topic modeling from the command line.
//
// Subcommands: train, topics, eval, select-source. Every command is a pure
// function of (config, seed, input files); timestamps appear only in the run
// manifest.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dalta/run.hpp"

namespace {

int run_train(const std::string& config_path, std::optional<uint64_t> seed,
              std::optional<std::string> out) {
    const dalta::RunConfig cfg = dalta::load_run_config(config_path, seed, out);
    const dalta::TrainArtifacts art = dalta::cmd_train(cfg);
    std::cout << "wrote " << art.checkpoint_path << " (" << art.steps << " steps)\n";
    return 0;
}

int run_topics(const std::string& checkpoint, const std::string& vocab, const std::string& domain,
               int top_k) {
    const dalta::Domain d = domain == "source" ? dalta::Domain::Source : dalta::Domain::Target;
    const dalta::TopicReport report = dalta::cmd_topics(checkpoint, vocab, d, top_k);
    std::cout << dalta::topic_report_to_json(report).dump(2) << "\n";
    return 0;
}

int run_eval(const dalta::EvalRequest& req, bool json_only) {
    const dalta::EvalResult result = dalta::cmd_eval(req);
    std::cout << dalta::eval_result_to_json(result).dump(2) << "\n";
    if (!json_only) std::cout << dalta::eval_result_to_tsv(result);
    return 0;
}

int run_select(const std::string& config_path, std::optional<uint64_t> seed, bool json_out) {
    const dalta::RunConfig cfg = dalta::load_run_config(config_path, seed, std::nullopt,
                                                        /*need_source=*/false);
    const auto ranked = dalta::cmd_select_source(cfg);
    if (json_out) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : ranked) arr.push_back(dalta::alignment_score_to_json(r.score));
        std::cout << arr.dump(2) << "\n";
    } else {
        std::cout << dalta::select_table(ranked);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DALTA: domain-adapted low-resource topic modeling"};
    app.require_subcommand(1);

    std::string config_path, checkpoint_path, vocab_path, corpus_path;
    std::string domain = "target", format = "lines";
    std::optional<uint64_t> seed;
    std::optional<std::string> out_dir;
    int top_k = 10, window = 10, folds = 5;
    bool json_only = false, require_labels = false;

    CLI::App* train = app.add_subcommand("train", "train a model from a config file");
    train->add_option("--config", config_path, "run config JSON")->required();
    train->add_option("--seed", seed, "seed override");
    train->add_option("--out", out_dir, "output directory override");

    CLI::App* topics = app.add_subcommand("topics", "print the topic report for a checkpoint");
    topics->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    topics->add_option("--vocab", vocab_path, "vocabulary file")->required();
    topics->add_option("--domain", domain, "source|target")
        ->check(CLI::IsMember({"source", "target"}));
    topics->add_option("--top-k", top_k, "words per topic");

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a corpus");
    eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    eval->add_option("--vocab", vocab_path, "vocabulary file")->required();
    eval->add_option("--corpus", corpus_path, "corpus file")->required();
    eval->add_option("--format", format, "lines|jsonl")->check(CLI::IsMember({"lines", "jsonl"}));
    eval->add_option("--domain", domain, "source|target")
        ->check(CLI::IsMember({"source", "target"}));
    eval->add_option("--top-k", top_k, "words per topic");
    eval->add_option("--window", window, "co-occurrence window width");
    eval->add_option("--folds", folds, "cross-validation folds");
    eval->add_option("--seed", seed, "seed for the CV split");
    eval->add_flag("--json", json_only, "JSON output only");
    eval->add_flag("--require-labels", require_labels, "fail if the corpus is unlabeled");

    CLI::App* select = app.add_subcommand("select-source", "rank candidate source domains");
    select->add_option("--config", config_path, "run config JSON with select.candidates")
        ->required();
    select->add_option("--seed", seed, "seed override");
    select->add_flag("--json", json_only, "JSON output");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return run_train(config_path, seed, out_dir);
        if (topics->parsed())
            return run_topics(checkpoint_path, vocab_path, domain, top_k);
        if (eval->parsed()) {
            dalta::EvalRequest req;
            req.checkpoint_path = checkpoint_path;
            req.vocab_path = vocab_path;
            req.corpus.path = corpus_path;
            req.corpus.format = format == "jsonl" ? dalta::CorpusFormat::Jsonl
                                                  : dalta::CorpusFormat::PlainTextLines;
            req.domain = domain == "source" ? dalta::Domain::Source : dalta::Domain::Target;
            req.settings.top_k = top_k;
            req.settings.window = window;
            req.settings.folds = folds;
            req.seed = seed.value_or(0);
            req.require_labels = require_labels;
            return run_eval(req, json_only);
        }
        if (select->parsed()) return run_select(config_path, seed, json_only);
    } catch (const dalta::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const dalta::TrainingDivergence& e) {
        std::cerr << "training diverged: " << e.what() << "\n";
        return 3;
    } catch (const dalta::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
