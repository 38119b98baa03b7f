// Minimal end-to-end tour of the library: generate a small synthetic
// corpus, train a supervised baseline, run one self-training round, then
// punctuate a sentence with the sliding-window decoder.
#include <iostream>

#include "punctr/punctr.hpp"

using namespace punctr;

int main() {
    const LabelSet labels = LabelSet::from_name("english4");

    SynthConfig synth;
    synth.content_types = 400;
    SynthGenerator train_gen(synth, derive_seed(7, 1));
    SynthGenerator dev_gen(synth, derive_seed(7, 2));
    SynthGenerator pool_gen(synth, derive_seed(7, 4));
    const auto train = train_gen.corpus(4000);
    const auto dev = dev_gen.corpus(1500);
    const auto unlabeled = words_only(pool_gen.corpus(12000));

    const Vocabulary vocab = build_vocabulary(train, 2000, 1);

    ModelConfig model;
    model.num_layers = 1;
    model.d_model = 32;
    model.num_heads = 2;
    model.d_ff = 64;
    model.vocab_size = vocab.size();
    model.num_classes = labels.num_classes();

    STConfig st;
    st.epochs = 4;
    st.alpha = 0.5;
    st.beta_human = 0.1;
    st.beta_pseudo = 0.2;
    st.seed = 7;

    WindowSpec window{120, 35, 15};
    const auto init = init_params<float>(model, derive_seed(st.seed, 0));

    std::cout << "training teacher + one self-training round on " << train.size()
              << " labeled and " << unlabeled.size() << " unlabeled documents...\n";
    const auto outcome = self_train_loop(train, dev, unlabeled, vocab, init, st, window);
    std::cout << "teacher validation F1 " << outcome.teacher_report.best_val_f1
              << ", student validation F1 " << outcome.student_val_f1.front() << "\n";
    std::cout << "selected " << outcome.best_stage << "\n";

    const std::string sentence = "qw0 tok0001 tok0002 conn00 tok0003 tok0004";
    ParseStats stats;
    const LabeledExample query = parse_line(sentence, labels, {}, stats);
    const auto predicted =
        decode_example(outcome.best_params, encode_words(query.words, vocab), window);
    std::cout << "input:  " << sentence << "\n"
              << "output: " << render_punctuated({query.words, predicted, Source::HUMAN}, labels)
              << "\n";
    return 0;
}
