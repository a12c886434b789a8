#pragma once

// Synthetic multi-domain aspect-sentiment corpus: generation, word-level
// tokenization, prompt rendering with exact aspect-span localization, and
// deterministic domain splits.
//
// Two sample families give the corpus its causal structure:
//   - single-aspect sentences, half of them using "scale" opinion words
//     (long, loud, ...) whose polarity depends on the aspect, so a model
//     trained on them must read the aspect token;
//   - contrastive sentences with two aspects of differing polarity (always
//     fixed-polarity opinion words), emitted together with their mirror
//     (same sentence, other aspect), so aspect identity alone decides the
//     label and sentence-level features cannot beat chance.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace tracedit {

enum class Polarity { positive, negative, neutral };

const char* to_string(Polarity p);
Polarity polarity_from_string(const std::string& s);

struct Sample {
    std::string sentence;
    std::string aspect;   // occurs verbatim in sentence
    Polarity polarity;    // toward the aspect, not toward distractors
    std::string domain;
};

struct PromptRendering {
    std::vector<int> tokens;            // length T
    std::vector<int> aspect_positions;  // 1-based, contiguous, inside the sentence copy
    int gold_token = -1;
    int template_id = 0;
    int sample_id = -1;  // index into the corpus this prompt was rendered from
};

class Vocab {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;

    Vocab();
    int add(const std::string& word);  // idempotent, returns id
    int id(const std::string& word) const;  // kUnk when absent
    bool contains(const std::string& word) const;
    const std::string& word(int id) const;
    int size() const { return static_cast<int>(words_.size()); }

private:
    std::vector<std::string> words_;
    std::map<std::string, int> index_;
};

struct Verbalizer {
    int positive_id = -1;
    int negative_id = -1;
    int neutral_id = -1;

    int token_for(Polarity p) const;
    // Entries in a fixed label order (positive, negative, neutral).
    std::vector<std::pair<Polarity, int>> entries() const;
};

// ------------------------------------------------------------------ corpus

struct AspectEntry {
    std::string text;          // one or more words
    bool amplitude_good;       // "more of it" is good: long battery vs long wait
};

struct DomainSpec {
    std::string tag;
    std::vector<AspectEntry> aspects;
};

struct OpinionLexicon {
    std::vector<std::string> fixed_positive;
    std::vector<std::string> fixed_negative;
    std::vector<std::string> fixed_neutral;
    std::vector<std::string> scale_high;  // polarity = aspect.amplitude_good
    std::vector<std::string> scale_low;   // polarity = !aspect.amplitude_good
};

struct CorpusSpec {
    std::vector<DomainSpec> domains;
    OpinionLexicon opinions;
    std::vector<std::string> single_templates;    // use {a} and {op}
    std::vector<std::string> contrast_templates;  // use {a1} {op1} {a2} {op2}
    std::vector<std::string> fillers;             // optional sentence prefixes
    int contrast_pairs_per_domain = 0;  // each pair emits a sample and its mirror
    int scale_singles_per_domain = 0;
    int fixed_singles_per_domain = 0;
    uint64_t seed = 1;
};

// The stock spec: four domains (restaurant, laptop, device, service) with
// mostly domain-unique aspect lexicons plus a small shared core.
// `per_domain` is the approximate total sample count per domain, ~55% of it
// contrastive.
CorpusSpec default_corpus_spec(int per_domain, uint64_t seed);

std::vector<Sample> generate_corpus(const CorpusSpec& spec);

// ---------------------------------------------------------------- rendering

std::vector<std::string> tokenize(const std::string& text);

struct PromptTemplate {
    int id = 0;
    std::string text;  // contains {S} and {A}
};

PromptTemplate default_prompt_template();

Vocab build_vocab(const std::vector<Sample>& corpus,
                  const std::vector<PromptTemplate>& templates, int max_vocab);

Verbalizer verbalizer_for(const Vocab& vocab);

PromptRendering render_prompt(const Sample& sample, int sample_id, const Vocab& vocab,
                              const PromptTemplate& tmpl, int max_len = 64);

std::vector<PromptRendering> render_corpus(const std::vector<Sample>& corpus, const Vocab& vocab,
                                           const PromptTemplate& tmpl, int max_len = 64);

// ------------------------------------------------------------------- splits

// A sample is contrastive when its (domain, sentence) carries at least two
// distinct aspects somewhere in the corpus.
std::vector<bool> contrastive_mask(const std::vector<Sample>& corpus);

// Deterministic 80/20 train/test partition per domain. Samples sharing a
// sentence stay in the same side so a contrastive mirror never leaks across
// the split. Returns true for test.
std::vector<bool> test_mask(const std::vector<Sample>& corpus);

struct SplitResult {
    std::vector<int> train;     // sample ids, in-domain train partition
    std::vector<int> in_test;   // in-domain test partition
    std::vector<int> out_test;  // out-domain test partition
    bool in_domain_pair = false;  // flagged when in == out
};

SplitResult split_domains(const std::vector<Sample>& corpus, const std::string& in_domain,
                          const std::string& out_domain);

std::vector<std::string> domain_tags(const std::vector<Sample>& corpus);

// Single-aspect samples from every domain's train partition: the base
// model's training distribution.
std::vector<int> base_training_ids(const std::vector<Sample>& corpus);

// --------------------------------------------------------------------- IO

void save_corpus_jsonl(const std::string& path, const std::vector<Sample>& corpus);
std::vector<Sample> load_corpus_jsonl(const std::string& path);
void save_renderings_jsonl(const std::string& path, const std::vector<PromptRendering>& renderings);

}  // namespace tracedit
