// doccl — contrastive document-clustering toolkit.
//
// Subcommands: prepare, augment-cache, train, evaluate, sweep.
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "doccl/augment.hpp"
#include "doccl/cluster.hpp"
#include "doccl/corpus.hpp"
#include "doccl/sampler.hpp"
#include "doccl/trainer.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ','))
        if (!item.empty()) parts.push_back(item);
    return parts;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// Flat key=value config file (TOML-compatible subset: comments with #,
// optional quotes around values). Each entry becomes a --key=value token.
std::vector<std::string> config_file_tokens(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
    std::vector<std::string> tokens;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string text = trim(line);
        if (text.empty() || text[0] == '#') continue;
        size_t eq = text.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("--config",
                                       "line " + std::to_string(line_no) + ": expected key=value");
        std::string key = trim(text.substr(0, eq));
        std::string value = trim(text.substr(eq + 1));
        if (value.size() >= 2 && ((value.front() == '"' && value.back() == '"') ||
                                  (value.front() == '\'' && value.back() == '\'')))
            value = value.substr(1, value.size() - 2);
        if (key.empty())
            throw CLI::ValidationError("--config",
                                       "line " + std::to_string(line_no) + ": empty key");
        tokens.push_back("--" + key + "=" + value);
    }
    return tokens;
}

// Config-file values are injected as tokens right after the subcommand
// name; take-last precedence means explicit flags always win.
std::vector<std::string> inject_config_tokens(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    for (size_t i = 0; i < args.size(); ++i) {
        std::string value;
        if (args[i] == "--config" && i + 1 < args.size()) {
            value = args[i + 1];
            args.erase(args.begin() + i, args.begin() + i + 2);
        } else if (args[i].rfind("--config=", 0) == 0) {
            value = args[i].substr(9);
            args.erase(args.begin() + i);
        } else {
            continue;
        }
        std::vector<std::string> extra = config_file_tokens(value);
        args.insert(args.begin() + 1, extra.begin(), extra.end());
        break;
    }
    return args;
}

struct ProviderOptions {
    std::string kind = "deterministic";
    std::string url;
    std::string synonyms_path;
    uint64_t seed = 42;
    int retries = 3;
    int backoff_ms = 500;
    int max_in_flight = 4;
};

void add_provider_flags(CLI::App* cmd, ProviderOptions& opts) {
    cmd->add_option("--provider", opts.kind, "Translation provider")
        ->check(CLI::IsMember({"remote", "deterministic"}))
        ->capture_default_str();
    cmd->add_option("--provider-url", opts.url, "Base URL of the remote translation service");
    cmd->add_option("--synonyms", opts.synonyms_path,
                    "Synonym table for the deterministic paraphraser (token alt1 alt2 ...)");
    cmd->add_option("--retries", opts.retries, "Remote provider attempts")->capture_default_str();
    cmd->add_option("--backoff-ms", opts.backoff_ms, "Initial retry backoff")
        ->capture_default_str();
    cmd->add_option("--max-in-flight", opts.max_in_flight, "Concurrent remote requests")
        ->capture_default_str();
}

std::unique_ptr<doccl::TranslationProvider> make_provider(const ProviderOptions& opts) {
    if (opts.kind == "remote") {
        if (opts.url.empty())
            throw CLI::ValidationError("--provider-url", "required with --provider remote");
        doccl::RemoteProviderOptions remote;
        remote.base_url = opts.url;
        remote.retries = opts.retries;
        remote.backoff_ms = opts.backoff_ms;
        remote.max_in_flight = opts.max_in_flight;
        return std::make_unique<doccl::RemoteTranslationProvider>(remote);
    }
    doccl::SynonymTable table = opts.synonyms_path.empty()
                                    ? doccl::SynonymTable::default_table()
                                    : doccl::SynonymTable::load(opts.synonyms_path);
    return std::make_unique<doccl::DeterministicParaphraser>(opts.seed, std::move(table));
}

json config_to_json(const doccl::TrainConfig& config) {
    json j;
    j["method"] = to_string(config.method);
    j["use_uda"] = config.use_uda;
    j["tau"] = config.tau;
    j["batch_pairs"] = config.batch_pairs;
    j["epochs"] = config.epochs;
    j["lr"] = config.lr;
    j["fraction"] = config.fraction;
    j["similarity"] = to_string(config.similarity);
    j["seed"] = config.seed;
    j["d_emb"] = config.d_emb;
    j["d_hid"] = config.d_hid;
    j["d_lat"] = config.d_lat;
    j["schedule"] =
        config.schedule == doccl::Schedule::PrefixSuffix ? "prefix-suffix" : "interleaved";
    j["freeze_uda_target"] = config.freeze_uda_target;
    j["scl_routes"] = config.scl_routes;
    j["uda_route"] = config.uda_route;
    return j;
}

// Resolved config, corpus fingerprint, seed and artifact paths; enough to
// reproduce the run. Written before training starts.
void write_manifest(const std::string& run_dir, const doccl::TrainConfig& config,
                    const std::string& corpus_path, const std::string& cache_path,
                    const ProviderOptions& provider) {
    json j;
    j["config"] = config_to_json(config);
    j["corpus"] = corpus_path;
    j["corpus_fingerprint"] = doccl::file_fingerprint(corpus_path);
    j["seed"] = config.seed;
    j["provider"] = provider.kind;
    j["cache"] = cache_path;
    j["artifacts"] = {{"metrics", "metrics.csv"},
                      {"embeddings", "embeddings.tsv"},
                      {"checkpoint_best", "checkpoint_best.bin"},
                      {"checkpoint_last", "checkpoint_last.bin"},
                      {"batch_kinds", "batch_kinds.log"}};
    std::ofstream out(fs::path(run_dir) / "manifest.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest.json in " + run_dir);
    out << j.dump(2) << "\n";
}

struct TrainFlags {
    std::string corpus_path;
    std::string out_dir;
    std::string cache_path;
    std::string method = "pcl";
    std::string similarity = "cosine";
    std::string schedule = "prefix-suffix";
    std::string routes = "es,fr";
    std::string uda_route = "es";
    bool use_uda = false;
    bool unfreeze_uda_target = false;
    bool export_epoch_embeddings = false;
    doccl::TrainConfig config;
};

void add_train_flags(CLI::App* cmd, TrainFlags& flags) {
    cmd->add_option("--corpus", flags.corpus_path, "Prepared corpus file")->required();
    cmd->add_option("--method", flags.method, "Training method")
        ->check(CLI::IsMember({"cl", "pcl", "scl"}))
        ->capture_default_str();
    cmd->add_flag("--use-uda", flags.use_uda, "Add the consistency loss on residual batches");
    cmd->add_option("--tau", flags.config.tau, "Softmax temperature")->capture_default_str();
    cmd->add_option("--fraction", flags.config.fraction, "Labeled-subset fraction rho")
        ->capture_default_str();
    cmd->add_option("--batch-pairs", flags.config.batch_pairs, "Pairs per mini-batch (C or m)")
        ->capture_default_str();
    cmd->add_option("--epochs", flags.config.epochs, "Training epochs")->capture_default_str();
    cmd->add_option("--lr", flags.config.lr, "Adam learning rate")->capture_default_str();
    cmd->add_option("--similarity", flags.similarity, "Similarity kernel")
        ->check(CLI::IsMember({"cosine", "manhattan", "euclidean"}))
        ->capture_default_str();
    cmd->add_option("--seed", flags.config.seed, "Seed for all randomness")
        ->capture_default_str();
    cmd->add_option("--d-emb", flags.config.d_emb, "Embedding width")->capture_default_str();
    cmd->add_option("--d-hid", flags.config.d_hid, "Hidden width")->capture_default_str();
    cmd->add_option("--d-lat", flags.config.d_lat, "Latent width")->capture_default_str();
    cmd->add_option("--routes", flags.routes, "SCL back-translation routes (two, comma separated)")
        ->capture_default_str();
    cmd->add_option("--uda-route", flags.uda_route, "Route for UDA pairs")->capture_default_str();
    cmd->add_option("--schedule", flags.schedule, "Batch schedule with UDA")
        ->check(CLI::IsMember({"prefix-suffix", "interleaved"}))
        ->capture_default_str();
    cmd->add_flag("--unfreeze-uda-target", flags.unfreeze_uda_target,
                  "Backpropagate through the clean-side distribution too");
    cmd->add_flag("--export-epoch-embeddings", flags.export_epoch_embeddings,
                  "Write embeddings_epoch_NNN.tsv after every epoch");
    cmd->add_option("--cache", flags.cache_path, "Augmentation cache file (JSONL)");
}

doccl::TrainConfig resolve_config(TrainFlags& flags) {
    flags.config.method = doccl::method_from_string(flags.method);
    flags.config.use_uda = flags.use_uda;
    flags.config.similarity = doccl::similarity_kind_from_string(flags.similarity);
    flags.config.schedule = flags.schedule == "interleaved" ? doccl::Schedule::Interleaved
                                                            : doccl::Schedule::PrefixSuffix;
    flags.config.freeze_uda_target = !flags.unfreeze_uda_target;
    flags.config.export_epoch_embeddings = flags.export_epoch_embeddings;
    flags.config.scl_routes = split_csv(flags.routes);
    flags.config.uda_route = flags.uda_route;
    try {
        flags.config.validate();
    } catch (const std::invalid_argument& e) {
        // Contradictory configuration is a usage error, caught before work.
        throw CLI::ValidationError("config", e.what());
    }
    return flags.config;
}

int run_app(int argc, char** argv) {
    CLI::App app{"Contrastive document clustering toolkit", "doccl"};
    app.require_subcommand(1);

    // ---- prepare ----
    std::string prep_input, prep_format = "jsonl", prep_out, prep_stopwords;
    int prep_min_freq = 1, prep_max_vocab = 30000, prep_max_tokens = 256;
    CLI::App* prepare = app.add_subcommand("prepare", "Preprocess a corpus into one file");
    prepare->add_option("--input", prep_input, "Raw corpus (JSONL file or class-directory root)")
        ->required();
    prepare->add_option("--format", prep_format, "Input layout")
        ->check(CLI::IsMember({"jsonl", "dir"}))
        ->capture_default_str();
    prepare->add_option("--out", prep_out, "Prepared corpus path")->required();
    prepare->add_option("--stopwords", prep_stopwords, "Stop-word file (one token per line)");
    prepare->add_option("--min-freq", prep_min_freq, "Minimum token frequency")
        ->capture_default_str();
    prepare->add_option("--max-vocab", prep_max_vocab, "Vocabulary cap including <unk>")
        ->capture_default_str();
    prepare->add_option("--max-tokens", prep_max_tokens, "Per-document token cap")
        ->capture_default_str();

    // ---- augment-cache ----
    std::string aug_corpus, aug_routes = "es,fr", aug_out;
    ProviderOptions aug_provider;
    CLI::App* augment =
        app.add_subcommand("augment-cache", "Pre-build back translations for offline training");
    augment->add_option("--corpus", aug_corpus, "Prepared corpus file")->required();
    augment->add_option("--routes", aug_routes, "Comma-separated route list")
        ->capture_default_str();
    augment->add_option("--out", aug_out, "Cache file (JSONL, appended to)")->required();
    augment->add_option("--seed", aug_provider.seed, "Seed for the deterministic paraphraser")
        ->capture_default_str();
    add_provider_flags(augment, aug_provider);

    // ---- train ----
    TrainFlags train_flags;
    ProviderOptions train_provider;
    std::string train_out, train_config_file;
    CLI::App* train_cmd = app.add_subcommand("train", "Train an encoder and evaluate per epoch");
    train_cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    train_cmd->add_option("--config", train_config_file,
                          "Flat key=value config file; flags win");
    add_train_flags(train_cmd, train_flags);
    add_provider_flags(train_cmd, train_provider);
    train_cmd->add_option("--out", train_out, "Run directory")->required();

    // ---- evaluate ----
    std::string eval_checkpoint, eval_corpus, eval_out;
    uint64_t eval_seed = 0;
    bool eval_seed_set = false;
    CLI::App* evaluate =
        app.add_subcommand("evaluate", "Cluster a corpus under a saved checkpoint");
    evaluate->add_option("--checkpoint", eval_checkpoint, "Checkpoint file")->required();
    evaluate->add_option("--corpus", eval_corpus, "Prepared corpus file")->required();
    evaluate->add_option("--out", eval_out, "Output directory")->required();
    evaluate->add_option("--seed", eval_seed, "Clustering seed (default: from checkpoint)")
        ->each([&](const std::string&) { eval_seed_set = true; });

    // ---- sweep ----
    TrainFlags sweep_flags;
    ProviderOptions sweep_provider;
    std::string sweep_out, sweep_taus, sweep_config_file;
    CLI::App* sweep = app.add_subcommand("sweep", "Train once per temperature value");
    sweep->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    sweep->add_option("--config", sweep_config_file, "Flat key=value config file; flags win");
    add_train_flags(sweep, sweep_flags);
    add_provider_flags(sweep, sweep_provider);
    sweep->add_option("--out", sweep_out, "Sweep output directory")->required();
    sweep->add_option("--tau-list", sweep_taus, "Comma-separated temperatures")->required();

    try {
        std::vector<std::string> args = inject_config_tokens(argc, argv);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (prepare->parsed()) {
            doccl::CorpusOptions options;
            options.stopwords = prep_stopwords.empty() ? doccl::default_stopwords()
                                                       : doccl::load_stopwords(prep_stopwords);
            options.min_frequency = prep_min_freq;
            options.max_size = prep_max_vocab;
            options.max_tokens = prep_max_tokens;
            auto format = prep_format == "jsonl" ? doccl::CorpusFormat::Jsonl
                                                 : doccl::CorpusFormat::DirPerClass;
            doccl::Corpus corpus = doccl::load_corpus(prep_input, format, options);
            doccl::save_prepared(corpus, prep_out);
            std::cout << "prepared " << corpus.size() << " documents, "
                      << corpus.class_count() << " classes, vocabulary "
                      << corpus.vocabulary().size() << ", fingerprint "
                      << doccl::file_fingerprint(prep_out) << "\n";
            return 0;
        }

        if (augment->parsed()) {
            doccl::Corpus corpus = doccl::load_prepared(aug_corpus);
            auto provider = make_provider(aug_provider);
            doccl::AugmentCache cache(aug_out);
            std::vector<doccl::CacheBuildTask> tasks;
            for (const std::string& route : split_csv(aug_routes))
                for (const doccl::Document& doc : corpus.documents())
                    tasks.push_back({doc.id, doc.text, {route, route}});
            int parallelism = aug_provider.kind == "remote" ? aug_provider.max_in_flight : 1;
            doccl::CacheBuildReport report =
                doccl::build_cache(cache, tasks, *provider, parallelism);
            std::cout << "computed " << report.computed << ", skipped " << report.skipped
                      << ", failed " << report.failures.size() << "\n";
            if (!report.failures.empty()) {
                std::cerr << "missing cache entries:\n";
                for (const auto& [key, error] : report.failures)
                    std::cerr << "  " << key << ": " << error << "\n";
                return 1;
            }
            return 0;
        }

        if (train_cmd->parsed()) {
            doccl::TrainConfig config = resolve_config(train_flags);
            train_provider.seed = config.seed;
            doccl::Corpus corpus = doccl::load_prepared(train_flags.corpus_path);
            auto provider = make_provider(train_provider);
            doccl::AugmentCache cache(train_flags.cache_path);
            fs::create_directories(train_out);
            write_manifest(train_out, config, train_flags.corpus_path, train_flags.cache_path,
                           train_provider);
            doccl::TrainResult result =
                doccl::train(config, corpus, {cache, *provider}, train_out);
            std::cout << "initial accuracy " << doccl::format_double(result.initial_accuracy)
                      << "\n";
            for (const auto& r : result.reports)
                std::cout << "epoch " << r.epoch << " L_CL "
                          << doccl::format_double(r.mean_contrastive) << " L_UDA "
                          << doccl::format_double(r.mean_uda) << " accuracy "
                          << doccl::format_double(r.accuracy) << "\n";
            std::cout << "best epoch " << result.best_epoch << " accuracy "
                      << doccl::format_double(result.best_accuracy) << "\n";
            return 0;
        }

        if (evaluate->parsed()) {
            auto [params, ckpt_seed] = doccl::load_checkpoint(eval_checkpoint);
            doccl::Corpus corpus = doccl::load_prepared(eval_corpus);
            if (static_cast<int>(corpus.vocabulary().size()) != params.dims.vocab_size)
                throw std::runtime_error("checkpoint vocabulary size does not match corpus");
            uint64_t seed = eval_seed_set ? eval_seed : ckpt_seed;
            doccl::EvalResult eval = doccl::evaluate_params(params, corpus, seed);
            fs::create_directories(eval_out);
            doccl::write_metrics_csv((fs::path(eval_out) / "metrics.csv").string(),
                                     eval.accuracy, {});
            doccl::write_embeddings_tsv((fs::path(eval_out) / "embeddings.tsv").string(), corpus,
                                        eval.clusters.assignment, eval.latents,
                                        static_cast<size_t>(params.dims.d_lat));
            std::cout << "accuracy " << doccl::format_double(eval.accuracy) << "\n";
            return 0;
        }

        if (sweep->parsed()) {
            doccl::TrainConfig config = resolve_config(sweep_flags);
            sweep_provider.seed = config.seed;
            std::vector<double> taus;
            for (const std::string& part : split_csv(sweep_taus)) {
                try {
                    size_t used = 0;
                    double tau = std::stod(part, &used);
                    if (used != part.size()) throw std::invalid_argument(part);
                    taus.push_back(tau);
                } catch (const std::exception&) {
                    throw CLI::ValidationError("--tau-list", "not a number: " + part);
                }
            }
            if (taus.empty()) throw CLI::ValidationError("--tau-list", "no temperatures given");
            doccl::Corpus corpus = doccl::load_prepared(sweep_flags.corpus_path);
            auto provider = make_provider(sweep_provider);
            doccl::AugmentCache cache(sweep_flags.cache_path);
            auto rows = doccl::sweep_tau(config, corpus, {cache, *provider}, taus, sweep_out);
            for (const auto& row : rows)
                std::cout << "tau " << doccl::format_double(row.tau) << " accuracy "
                          << doccl::format_double(row.accuracy) << "\n";
            return 0;
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) { return run_app(argc, argv); }
