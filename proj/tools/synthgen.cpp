// Regenerates the bundled synthetic data fixtures under data/.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "amr/synth.hpp"

using namespace amr;

namespace {

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"generate the bundled synthetic corpora"};
    std::string out_dir = "data";
    int train_n = 60, dev_n = 12, align_n = 20;
    uint64_t seed = 7;
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--train", train_n, "training sentences")->capture_default_str();
    app.add_option("--dev", dev_n, "dev sentences")->capture_default_str();
    app.add_option("--seed", seed, "generator seed")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    try {
        std::filesystem::create_directories(out_dir);
        auto path = [&](const std::string& name) { return out_dir + "/" + name; };

        SynthConfig train_cfg;
        train_cfg.sentences = train_n;
        train_cfg.seed = seed;
        std::vector<CorpusEntry> train = generate_synthetic_corpus(train_cfg);
        write_corpus(train, path("synth_train.amr"));

        SynthConfig dev_cfg;
        dev_cfg.sentences = dev_n;
        dev_cfg.seed = seed + 1;
        write_corpus(generate_synthetic_corpus(dev_cfg), path("synth_dev.amr"));

        SynthConfig un_cfg = train_cfg;
        un_cfg.unaligned_fraction = 0.10;
        write_corpus(generate_synthetic_corpus(un_cfg), path("synth_unaligned.amr"));

        SynthConfig align_cfg;
        align_cfg.sentences = align_n;
        align_cfg.seed = seed + 2;
        std::vector<CorpusEntry> align_corpus = generate_synthetic_corpus(align_cfg);
        AlignFixtures fx = alignment_fixtures(align_corpus);
        write_corpus(fx.bare, path("align_corpus.amr"));
        write_text(path("align_isi.txt"), fx.isi_text);
        write_corpus(fx.jamr, path("align_jamr.amr"));
        write_corpus(align_corpus, path("align_full.amr"));

        write_vectors_file(synthetic_vectors(train, 16, 4, seed + 3), path("vectors_train.txt"));

        // wikification fixtures: training corpus with :wiki, an input corpus
        // without, and a linker output file
        std::vector<CorpusEntry> wiki_train = parse_corpus(
            "# ::id wiki-train-1\n"
            "(m / meet-03 :ARG0 (p / person :wiki \"Ann_Alpha\" :name (n / name :op1 \"Ann\"))"
            " :ARG1 (q / person :wiki \"Kim_Beta\" :name (n2 / name :op1 \"Kim\")))\n\n"
            "# ::id wiki-train-2\n"
            "(s / see-01 :ARG0 (p / person :wiki \"Ann_Alpha\" :name (n / name :op1 \"Ann\")))\n\n"
            "# ::id wiki-train-3\n"
            "(s / see-01 :ARG0 (p / person :wiki \"Ann_Gamma\" :name (n / name :op1 \"Ann\")))\n");
        write_corpus(wiki_train, path("wiki_train.amr"));
        std::vector<CorpusEntry> wiki_input = parse_corpus(
            "# ::id wiki-in-1\n"
            "(m / meet-03 :ARG0 (p / person :name (n / name :op1 \"Ann\"))"
            " :ARG1 (q / person :name (n2 / name :op1 \"Bo\")))\n\n"
            "# ::id wiki-in-2\n"
            "(s / see-01 :ARG0 (c / city :name (n / name :op1 \"Qosk\")))\n");
        write_corpus(wiki_input, path("wiki_input.amr"));
        write_text(path("wiki_linker.tsv"), "Ann\tAnn_Linker\nBo\tBo_Linker\n");

        std::cout << "fixtures written to " << out_dir << "/\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
