// amr: transition-based AMR parsing toolkit
//
// subcommands: align-merge, oracle, train, parse, score, wikify, tag

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "amr/align.hpp"
#include "amr/preprocess.hpp"
#include "amr/smatch.hpp"
#include "amr/synth.hpp"
#include "amr/train.hpp"

using namespace amr;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct ChannelFiles {
    std::string pos, dep, ner, concepts;
    std::string vectors;
};

void add_channel_flags(CLI::App* cmd, ChannelFiles& ch) {
    cmd->add_option("--pos-tags", ch.pos, "POS tag file (token TAB tag)");
    cmd->add_option("--dep-tags", ch.dep, "dependency tag file");
    cmd->add_option("--ner-tags", ch.ner, "NER tag file");
    cmd->add_option("--concept-tags", ch.concepts, "preprocessed concept tag file");
    cmd->add_option("--vectors", ch.vectors, "contextual vectors file (pooled per word)");
}

// attaches tag/vector channels to per-sentence features
void load_channels(const ChannelFiles& ch, std::vector<SentenceFeatures>& feats,
                   int& pretrained_dim, std::vector<std::string>& channels) {
    auto add_tags = [&](const std::string& path, const std::string& name) {
        if (path.empty()) return;
        auto sents = read_tag_file(path);
        if (sents.size() != feats.size())
            throw std::runtime_error(name + " tag file has " + std::to_string(sents.size()) +
                                     " sentences, corpus has " + std::to_string(feats.size()));
        for (size_t i = 0; i < sents.size(); ++i) {
            std::vector<std::string> tags;
            for (const auto& [tok, tag] : sents[i]) tags.push_back(tag);
            feats[i].tags[name] = std::move(tags);
        }
        channels.push_back(name);
    };
    add_tags(ch.pos, "pos");
    add_tags(ch.dep, "dep");
    add_tags(ch.ner, "ner");
    add_tags(ch.concepts, "concept");
    if (!ch.vectors.empty()) {
        std::vector<ContextualVectors> cvs = read_vectors_file(ch.vectors);
        if (cvs.size() != feats.size())
            throw std::runtime_error("vectors file sentence count mismatch");
        for (size_t i = 0; i < cvs.size(); ++i) {
            feats[i].pretrained = pool_vectors(cvs[i]);
            if (!feats[i].pretrained.empty())
                pretrained_dim = static_cast<int>(feats[i].pretrained[0].size());
        }
    }
}

int cmd_align_merge(const std::string& corpus_path, const std::string& isi_path,
                    const std::string& jamr_path, const std::string& out_path) {
    std::vector<CorpusEntry> corpus = read_corpus(corpus_path);
    std::vector<std::string> isi_lines;
    {
        std::istringstream in(read_file(isi_path));
        std::string line;
        while (std::getline(in, line)) isi_lines.push_back(line);
    }
    if (isi_lines.size() < corpus.size())
        throw std::runtime_error(isi_path + ": fewer lines than corpus sentences");
    std::vector<CorpusEntry> jamr = read_corpus(jamr_path);
    if (jamr.size() != corpus.size())
        throw std::runtime_error(jamr_path + ": sentence count differs from corpus");

    for (size_t i = 0; i < corpus.size(); ++i) {
        AlignmentMap sem =
            read_isi_alignments(isi_lines[i], corpus[i].graph, static_cast<int>(i) + 1);
        AlignmentMap jm = parse_alignment_meta(jamr[i]);
        AlignmentMap merged = merge_alignments(corpus[i].graph, sem, jm);
        corpus[i].set_meta("alignments", format_alignments(corpus[i].graph, merged));
    }
    write_corpus(corpus, out_path);
    std::cout << "wrote " << corpus.size() << " aligned sentences to " << out_path << "\n";
    return 0;
}

int cmd_oracle(const std::string& corpus_path, const std::string& out_path, int restarts,
               uint64_t seed, int jobs) {
    std::vector<CorpusEntry> corpus = read_corpus(corpus_path);
    std::vector<TrainSentence> sents = oracle_corpus(corpus);
    std::string out;
    int dropped_nodes = 0;
    for (const TrainSentence& s : sents) {
        out += format_actions(s.actions) + "\n";
        dropped_nodes += s.dropped_nodes;
    }
    if (!out_path.empty()) atomic_write_text(out_path, out);
    double bound = oracle_upper_bound(sents, restarts, seed, jobs);
    std::cout << std::fixed << std::setprecision(4);
    std::cout << "sentences   " << sents.size() << "\n";
    std::cout << "dropped     " << dropped_nodes << " nodes\n";
    std::cout << "upper bound " << bound << " (corpus Smatch of replayed oracle graphs)\n";
    return 0;
}

ParserModel build_model(const std::vector<TrainSentence>& sents, const ModelConfig& base,
                        const std::vector<std::string>& channels, uint64_t seed,
                        int min_word_count, const std::string& word_vocab_file,
                        const std::string& save_prefix) {
    ModelConfig cfg = base;
    cfg.tag_channels = channels;
    std::map<std::string, Vocab> tag_vocabs;
    for (const std::string& ch : channels) {
        std::vector<std::string> all;
        for (const TrainSentence& s : sents) {
            auto it = s.feats.tags.find(ch);
            if (it != s.feats.tags.end()) all.insert(all.end(), it->second.begin(), it->second.end());
        }
        tag_vocabs.emplace(ch, Vocab::build(all));
    }
    Vocab words = word_vocab_file.empty() ? build_word_vocab(sents, min_word_count)
                                          : Vocab::load_file(word_vocab_file);
    Vocab concepts = build_concept_vocab(sents);
    Vocab roles = build_role_vocab(sents);
    if (!save_prefix.empty()) {
        words.save(save_prefix + ".words");
        concepts.save(save_prefix + ".concepts");
        roles.save(save_prefix + ".roles");
    }
    return ParserModel::create(cfg, words, concepts, roles, tag_vocabs, seed);
}

std::string csv_log(const TrainResult& r) {
    std::ostringstream out;
    out << "epoch,train_loss,dev_smatch\n" << std::fixed << std::setprecision(6);
    for (const EpochLog& l : r.log)
        out << l.epoch << "," << l.train_loss << "," << l.dev_smatch << "\n";
    return out.str();
}

int cmd_score(const std::string& gold_path, const std::string& pred_path, int restarts,
              uint64_t seed, int jobs, const std::string& csv_path) {
    std::vector<CorpusEntry> gold = read_corpus(gold_path);
    std::vector<CorpusEntry> pred = read_corpus(pred_path);
    if (gold.size() != pred.size())
        throw std::runtime_error("gold and prediction corpora differ in sentence count");
    std::vector<AmrGraph> g, p;
    for (const CorpusEntry& e : gold) g.push_back(e.graph);
    for (const CorpusEntry& e : pred) p.push_back(e.graph);
    CorpusScore score = score_corpus(p, g, restarts, seed, jobs);

    std::ostringstream csv;
    csv << "metric,f1\n" << std::fixed << std::setprecision(4);
    std::cout << std::fixed << std::setprecision(4);
    for (size_t i = 0; i < MetricSuite::names().size(); ++i) {
        std::cout << std::left << std::setw(14) << MetricSuite::names()[i] << score.micro[i]
                  << "\n";
        csv << MetricSuite::names()[i] << "," << score.micro[i] << "\n";
    }
    if (!csv_path.empty()) atomic_write_text(csv_path, csv.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"transition-based AMR parsing toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value file overriding flags");

    uint64_t seed = 1;
    int jobs = 1;
    app.add_option("--seed", seed, "global random seed")->capture_default_str();
    app.add_option("--jobs", jobs, "sentence-level parallelism")->capture_default_str();

    // --- align-merge
    std::string am_corpus, am_isi, am_jamr, am_out;
    CLI::App* am = app.add_subcommand("align-merge", "merge SEM and JAMR alignments");
    am->add_option("--corpus", am_corpus, "PENMAN corpus")->required();
    am->add_option("--isi", am_isi, "ISI/SEM alignment file (one line per sentence)")->required();
    am->add_option("--jamr", am_jamr, "JAMR-annotated corpus (::alignments)")->required();
    am->add_option("--out", am_out, "output corpus with merged alignments")->required();

    // --- oracle
    std::string or_corpus, or_out;
    int or_restarts = kDefaultRestarts;
    CLI::App* orc = app.add_subcommand("oracle", "derive training action sequences");
    orc->add_option("--corpus", or_corpus, "aligned corpus")->required();
    orc->add_option("--out", or_out, "action sequence file (one line per sentence)");
    orc->add_option("--restarts", or_restarts, "Smatch restarts for the upper bound");

    // --- train
    std::string tr_corpus, tr_dev, tr_out = "model.ckpt", tr_init, tr_log, tr_objective = "mle";
    int tr_epochs = 50, tr_batch = 40, tr_seeds = 1, tr_beam = 1;
    double tr_lr = 0.1, tr_decay = 0.05, tr_epsilon = 0.05;
    ModelConfig mc;
    bool no_attention = false;
    ChannelFiles tr_ch, dev_ch;
    CLI::App* tr = app.add_subcommand("train", "train a parser");
    tr->add_option("--corpus", tr_corpus, "aligned training corpus")->required();
    tr->add_option("--dev", tr_dev, "aligned development corpus");
    tr->add_option("--objective", tr_objective, "mle | mle-smatch | rl")
        ->check(CLI::IsMember({"mle", "mle-smatch", "rl"}));
    tr->add_option("--init", tr_init, "initial checkpoint (required for rl)");
    tr->add_option("--out", tr_out, "checkpoint output path");
    tr->add_option("--log", tr_log, "per-epoch CSV log path");
    tr->add_option("--epochs", tr_epochs, "training epochs")->capture_default_str();
    tr->add_option("--lr", tr_lr, "learning rate")->capture_default_str();
    tr->add_option("--lr-decay", tr_decay, "per-epoch decay")->capture_default_str();
    tr->add_option("--epsilon", tr_epsilon, "RL flattening probability")->capture_default_str();
    tr->add_option("--batch", tr_batch, "RL batch size")->capture_default_str();
    tr->add_option("--seeds", tr_seeds, "train N seeds, keep the best on dev");
    tr->add_option("--beam", tr_beam, "beam width for dev evaluation");
    int tr_min_count = 1;
    std::string tr_word_vocab, tr_save_vocabs;
    tr->add_option("--min-word-count", tr_min_count,
                   "words below this frequency train as <unk>")->capture_default_str();
    tr->add_option("--word-vocab", tr_word_vocab, "fixed word vocabulary file (one per line)");
    tr->add_option("--save-vocabs", tr_save_vocabs,
                   "write PREFIX.words / .concepts / .roles vocabulary files");
    tr->add_option("--word-dim", mc.word_dim)->capture_default_str();
    tr->add_option("--input-dim", mc.input_dim)->capture_default_str();
    tr->add_option("--hidden-dim", mc.hidden_dim)->capture_default_str();
    tr->add_flag("--no-attention", no_attention, "disable the encoder/attention channel");
    add_channel_flags(tr, tr_ch);
    tr->add_option("--dev-pos-tags", dev_ch.pos, "POS tags for the dev corpus");
    tr->add_option("--dev-dep-tags", dev_ch.dep, "dep tags for the dev corpus");
    tr->add_option("--dev-ner-tags", dev_ch.ner, "NER tags for the dev corpus");
    tr->add_option("--dev-concept-tags", dev_ch.concepts, "concept tags for the dev corpus");
    tr->add_option("--dev-vectors", dev_ch.vectors, "contextual vectors for the dev corpus");

    // --- parse
    std::string pa_model, pa_input, pa_out;
    int pa_beam = 10;
    ChannelFiles pa_ch;
    std::string pa_input_pos;
    CLI::App* pa = app.add_subcommand("parse", "parse sentences to AMR graphs");
    pa->add_option("--model", pa_model, "checkpoint")->required();
    pa->add_option("--input", pa_input, "corpus with ::snt or ::tok lines");
    pa->add_option("corpus", pa_input_pos, "corpus (positional alternative to --input)");
    pa->add_option("--out", pa_out, "PENMAN output corpus")->required();
    pa->add_option("--beam", pa_beam, "beam width")->capture_default_str();
    add_channel_flags(pa, pa_ch);

    // --- score
    std::string sc_gold, sc_pred, sc_csv;
    int sc_restarts = kDefaultRestarts;
    CLI::App* sc = app.add_subcommand("score", "Smatch and fine-grained metrics");
    sc->add_option("gold", sc_gold, "gold corpus")->required();
    sc->add_option("pred", sc_pred, "predicted corpus")->required();
    sc->add_option("--csv", sc_csv, "also write CSV here");
    sc->add_option("--restarts", sc_restarts, "hill-climbing restarts")->capture_default_str();

    // --- wikify
    std::string wk_corpus, wk_out, wk_dict, wk_linker, wk_build_from;
    bool wk_strip = false;
    CLI::App* wk = app.add_subcommand("wikify", "dictionary + linker wikification");
    wk->add_option("--corpus", wk_corpus, "corpus to annotate (or strip)")->required();
    wk->add_option("--out", wk_out, "output corpus")->required();
    wk->add_option("--dict", wk_dict, "wiki dictionary file");
    wk->add_option("--linker", wk_linker, "entity-linker output (name TAB link)");
    wk->add_option("--build-dict", wk_build_from,
                   "build --dict from this training corpus first");
    wk->add_flag("--strip", wk_strip, "remove :wiki attributes instead of adding them");

    // --- tag
    std::string tg_corpus, tg_vectors, tg_out, tg_tagger;
    int tg_folds = 10;
    double tg_l2 = 1e-3;
    bool tg_jackknife = false;
    CLI::App* tg = app.add_subcommand("tag", "train/apply the linear concept tagger");
    tg->add_option("--corpus", tg_corpus, "aligned corpus (labels from alignments)")->required();
    tg->add_option("--vectors", tg_vectors, "contextual vectors file")->required();
    tg->add_option("--out", tg_out, "tag file output")->required();
    tg->add_option("--tagger", tg_tagger, "tagger model path (save, or load with --apply)");
    tg->add_flag("--jackknife", tg_jackknife, "tag each fold with a model trained on the rest");
    tg->add_option("--folds", tg_folds, "jackknife folds")->capture_default_str();
    tg->add_option("--l2", tg_l2, "L2 regularization")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;  // usage errors exit 2, --help exits 0
    }

    try {
        if (*am) return cmd_align_merge(am_corpus, am_isi, am_jamr, am_out);
        if (*orc) return cmd_oracle(or_corpus, or_out, or_restarts, seed, jobs);
        if (*sc) return cmd_score(sc_gold, sc_pred, sc_restarts, seed, jobs, sc_csv);

        if (*tr) {
            std::vector<CorpusEntry> corpus = read_corpus(tr_corpus);
            std::vector<TrainSentence> sents = oracle_corpus(corpus);
            if (sents.empty()) throw EmptyCorpus("training corpus is empty");
            std::vector<SentenceFeatures> feats;
            for (TrainSentence& s : sents) feats.push_back(s.feats);
            std::vector<std::string> channels;
            load_channels(tr_ch, feats, mc.pretrained_dim, channels);
            for (size_t i = 0; i < sents.size(); ++i) sents[i].feats = feats[i];

            std::vector<TrainSentence> dev;
            if (!tr_dev.empty()) {
                dev = oracle_corpus(read_corpus(tr_dev));
                std::vector<SentenceFeatures> dev_feats;
                for (TrainSentence& s : dev) dev_feats.push_back(s.feats);
                int dev_dim = 0;
                std::vector<std::string> dev_channels;
                load_channels(dev_ch, dev_feats, dev_dim, dev_channels);
                for (size_t i = 0; i < dev.size(); ++i) dev[i].feats = dev_feats[i];
            }
            mc.attention = !no_attention;

            TrainResult result;
            if (tr_objective == "rl") {
                if (tr_init.empty())
                    throw MissingInit("--objective rl requires --init <mle checkpoint>");
                ParserModel model = ParserModel::load(tr_init);
                RlConfig cfg;
                cfg.epochs = tr_epochs;
                cfg.lr = tr_lr;
                cfg.lr_decay = tr_decay;
                cfg.epsilon = tr_epsilon;
                cfg.batch_size = tr_batch;
                cfg.eval_beam = tr_beam;
                cfg.seed = seed;
                cfg.jobs = jobs;
                RlStats stats;
                result = train_rl(model, sents, dev, cfg, &stats);
                model.save(tr_out);
                std::cout << "sampled " << stats.sampled << " decodes, " << stats.flattened_decodes
                          << " flattened, " << stats.zero_advantage << " zero-advantage\n";
            } else {
                TrainConfig cfg;
                cfg.epochs = tr_epochs;
                cfg.lr = tr_lr;
                cfg.lr_decay = tr_decay;
                cfg.weight_by_smatch = tr_objective == "mle-smatch";
                cfg.eval_beam = tr_beam;
                cfg.seed = seed;
                cfg.jobs = jobs;
                if (cfg.weight_by_smatch) attach_smatch_weights(sents, kDefaultRestarts, seed);
                ParserModel model;
                if (!tr_init.empty()) {
                    model = ParserModel::load(tr_init);
                    result = train_mle(model, sents, dev, cfg);
                } else if (tr_seeds > 1) {
                    result = train_mle_best_of_seeds(
                        model,
                        [&](uint64_t s) {
                            return build_model(sents, mc, channels, s, tr_min_count,
                                               tr_word_vocab, tr_save_vocabs);
                        },
                        sents, dev, cfg, tr_seeds);
                } else {
                    model = build_model(sents, mc, channels, seed, tr_min_count, tr_word_vocab,
                                        tr_save_vocabs);
                    result = train_mle(model, sents, dev, cfg);
                }
                model.save(tr_out);
            }
            if (!tr_log.empty()) atomic_write_text(tr_log, csv_log(result));
            std::cout << std::fixed << std::setprecision(4);
            std::cout << "best dev Smatch " << result.best_dev << " at epoch "
                      << result.best_epoch << "; checkpoint " << tr_out << "\n";
            return 0;
        }

        if (*pa) {
            if (pa_input.empty()) pa_input = pa_input_pos;
            if (pa_input.empty()) throw std::runtime_error("parse: no input corpus given");
            ParserModel model = ParserModel::load(pa_model);
            std::vector<CorpusEntry> corpus = read_corpus(pa_input);
            std::vector<SentenceFeatures> feats;
            for (const CorpusEntry& e : corpus) {
                SentenceFeatures f;
                f.tokens = e.tokens();
                feats.push_back(std::move(f));
            }
            int dim = 0;
            std::vector<std::string> channels;
            load_channels(pa_ch, feats, dim, channels);
            DecodeConfig dc;
            dc.mode = pa_beam <= 1 ? DecodeMode::Greedy : DecodeMode::Beam;
            dc.beam = pa_beam;
            dc.seed = seed;
            std::vector<DecodeResult> decoded = decode_corpus(model, feats, dc, jobs);
            std::vector<CorpusEntry> out;
            for (size_t i = 0; i < corpus.size(); ++i) {
                CorpusEntry e;
                for (const auto& [k, v] : corpus[i].meta)
                    if (k == "id" || k == "snt" || k == "tok") e.meta.emplace_back(k, v);
                e.graph = ensure_connected(decoded[i].graph);
                if (e.graph.empty()) e.graph = parse_penman("(a / amr-empty)");
                out.push_back(std::move(e));
            }
            write_corpus(out, pa_out);
            std::cout << "parsed " << out.size() << " sentences to " << pa_out << "\n";
            return 0;
        }

        if (*wk) {
            std::vector<CorpusEntry> corpus = read_corpus(wk_corpus);
            if (wk_strip) {
                for (CorpusEntry& e : corpus) e.graph = strip_wiki(e.graph);
                write_corpus(corpus, wk_out);
                std::cout << "stripped :wiki from " << corpus.size() << " sentences\n";
                return 0;
            }
            WikiDictionary dict;
            if (!wk_build_from.empty()) {
                dict = WikiDictionary::build(read_corpus(wk_build_from));
                if (!wk_dict.empty()) dict.save(wk_dict);
            } else if (!wk_dict.empty()) {
                dict = WikiDictionary::load(wk_dict);
            }
            std::map<std::string, std::string> linker;
            if (!wk_linker.empty()) {
                std::istringstream in(read_file(wk_linker));
                std::string line;
                while (std::getline(in, line)) {
                    size_t tab = line.find('\t');
                    if (tab != std::string::npos)
                        linker[line.substr(0, tab)] = line.substr(tab + 1);
                }
            }
            for (CorpusEntry& e : corpus) e.graph = wikify(e.graph, dict, linker);
            write_corpus(corpus, wk_out);
            std::cout << "wikified " << corpus.size() << " sentences to " << wk_out << "\n";
            return 0;
        }

        if (*tg) {
            std::vector<CorpusEntry> corpus = read_corpus(tg_corpus);
            std::vector<ContextualVectors> cvs = read_vectors_file(tg_vectors);
            if (cvs.size() != corpus.size())
                throw std::runtime_error("vectors file sentence count mismatch");
            std::vector<std::vector<std::vector<double>>> vecs;
            std::vector<std::vector<std::string>> labels;
            for (size_t i = 0; i < corpus.size(); ++i) {
                vecs.push_back(pool_vectors(cvs[i]));
                labels.push_back(concept_labels(corpus[i]));
            }
            std::vector<std::vector<std::string>> tags;
            if (tg_jackknife) {
                tags = jackknife_tags(vecs, labels, tg_folds, tg_l2);
            } else {
                std::vector<TaggerExample> examples;
                for (size_t i = 0; i < vecs.size(); ++i)
                    for (size_t w = 0; w < vecs[i].size(); ++w)
                        examples.push_back({vecs[i][w], labels[i][w]});
                LinearTagger tagger = train_linear_tagger(examples, tg_l2);
                if (!tg_tagger.empty()) tagger.save(tg_tagger);
                for (const auto& v : vecs) tags.push_back(tagger.tag(v));
            }
            std::vector<std::vector<std::pair<std::string, std::string>>> out;
            for (size_t i = 0; i < corpus.size(); ++i) {
                std::vector<std::pair<std::string, std::string>> sent;
                std::vector<std::string> toks = corpus[i].tokens();
                for (size_t w = 0; w < toks.size(); ++w) sent.emplace_back(toks[w], tags[i][w]);
                out.push_back(std::move(sent));
            }
            write_tag_file(out, tg_out);
            std::cout << "tagged " << out.size() << " sentences to " << tg_out << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
