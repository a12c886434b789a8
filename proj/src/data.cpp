#include "tracedit/data.hpp"

#include "tracedit/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace tracedit {

const char* to_string(Polarity p) {
    switch (p) {
        case Polarity::positive: return "positive";
        case Polarity::negative: return "negative";
        case Polarity::neutral: return "neutral";
    }
    throw std::invalid_argument("unknown polarity value");
}

Polarity polarity_from_string(const std::string& s) {
    if (s == "positive") return Polarity::positive;
    if (s == "negative") return Polarity::negative;
    if (s == "neutral") return Polarity::neutral;
    throw std::invalid_argument("unknown polarity '" + s + "'");
}

// -------------------------------------------------------------------- vocab

Vocab::Vocab() {
    words_ = {"<pad>", "<unk>"};
    index_ = {{"<pad>", kPad}, {"<unk>", kUnk}};
}

int Vocab::add(const std::string& word) {
    auto it = index_.find(word);
    if (it != index_.end()) return it->second;
    int id = static_cast<int>(words_.size());
    words_.push_back(word);
    index_.emplace(word, id);
    return id;
}

int Vocab::id(const std::string& word) const {
    auto it = index_.find(word);
    return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(const std::string& word) const { return index_.count(word) > 0; }

const std::string& Vocab::word(int id) const {
    if (id < 0 || id >= size()) throw std::invalid_argument("vocab: id out of range");
    return words_[static_cast<size_t>(id)];
}

int Verbalizer::token_for(Polarity p) const {
    switch (p) {
        case Polarity::positive: return positive_id;
        case Polarity::negative: return negative_id;
        case Polarity::neutral: return neutral_id;
    }
    throw std::invalid_argument("unknown polarity value");
}

std::vector<std::pair<Polarity, int>> Verbalizer::entries() const {
    return {{Polarity::positive, positive_id},
            {Polarity::negative, negative_id},
            {Polarity::neutral, neutral_id}};
}

// ------------------------------------------------------------- default spec

CorpusSpec default_corpus_spec(int per_domain, uint64_t seed) {
    if (per_domain < 8) throw std::invalid_argument("corpus: per_domain too small");
    CorpusSpec spec;
    spec.seed = seed;

    // Aspects shared by every domain keep out-of-domain transfer grounded.
    const std::vector<AspectEntry> shared = {
        {"quality", true}, {"design", true}, {"price", false}, {"value", true}};

    DomainSpec restaurant{"restaurant",
                          {{"portions", true},
                           {"soup", true},
                           {"coffee", true},
                           {"menu", true},
                           {"dessert", true},
                           {"pasta", true},
                           {"steak", true},
                           {"wine list", true},
                           {"wait", false},
                           {"queue", false},
                           {"crowd", false},
                           {"bill", false},
                           {"wait time", false}}};
    DomainSpec laptop{"laptop",
                      {{"battery", true},
                       {"screen", true},
                       {"speakers", true},
                       {"keyboard", true},
                       {"trackpad", true},
                       {"processor", true},
                       {"battery life", true},
                       {"ram", true},
                       {"fan", false},
                       {"chassis", false},
                       {"bezel", false},
                       {"startup time", false},
                       {"glare", false}}};
    DomainSpec device{"device",
                      {{"camera", true},
                       {"display", true},
                       {"signal", true},
                       {"speaker", true},
                       {"flash", true},
                       {"touch screen", true},
                       {"reception", true},
                       {"storage", true},
                       {"charger", false},
                       {"casing", false},
                       {"adapter", false},
                       {"lag", false},
                       {"boot time", false}}};
    DomainSpec service{"service",
                       {{"support", true},
                        {"staff", true},
                        {"coverage", true},
                        {"communication", true},
                        {"documentation", true},
                        {"onboarding", true},
                        {"phone support", true},
                        {"response", false},
                        {"delivery", false},
                        {"refund", false},
                        {"paperwork", false},
                        {"hold", false},
                        {"response time", false}}};
    for (auto* d : {&restaurant, &laptop, &device, &service})
        d->aspects.insert(d->aspects.end(), shared.begin(), shared.end());
    spec.domains = {restaurant, laptop, device, service};

    spec.opinions.fixed_positive = {"great",    "excellent", "fantastic", "wonderful",
                                    "amazing",  "superb",    "delightful", "impressive",
                                    "outstanding", "solid",  "reliable",  "pleasant"};
    spec.opinions.fixed_negative = {"terrible", "awful",      "horrible",  "disappointing",
                                    "dreadful", "poor",       "frustrating", "unreliable",
                                    "flawed",   "annoying",   "miserable", "clumsy"};
    spec.opinions.fixed_neutral = {"okay",         "average",  "ordinary", "acceptable",
                                   "standard",     "typical",  "fine",     "moderate",
                                   "unremarkable", "passable"};
    spec.opinions.scale_high = {"long", "big", "hot", "loud", "strong", "thick", "bright"};
    spec.opinions.scale_low = {"short", "small", "cold", "quiet", "weak", "thin", "dim"};

    spec.single_templates = {
        "the {a} was {op}",
        "the {a} was really {op}",
        "i thought the {a} was {op}",
        "overall the {a} seemed {op}",
        "the {a} turned out to be {op}",
        "honestly the {a} felt {op}",
    };
    spec.contrast_templates = {
        "the {a1} was {op1} but the {a2} was {op2}",
        "the {a1} was {op1} although the {a2} was {op2}",
        "the {a1} seemed {op1} while the {a2} felt {op2}",
        "the {a1} was {op1} yet the {a2} was {op2}",
    };
    spec.fillers = {
        "to be honest",       "in my experience", "after a week",
        "for the money",      "all things considered", "right out of the box",
        "compared to last time", "after the update", "from day one",
        "by any measure",
    };

    // ~55% contrastive, remainder split between scale and fixed singles.
    spec.contrast_pairs_per_domain = static_cast<int>(per_domain * 0.55 / 2.0);
    int singles = per_domain - 2 * spec.contrast_pairs_per_domain;
    spec.scale_singles_per_domain = singles / 2;
    spec.fixed_singles_per_domain = singles - spec.scale_singles_per_domain;
    return spec;
}

// --------------------------------------------------------------- generation

namespace {

bool contains_subsequence(const std::vector<std::string>& haystack,
                          const std::vector<std::string>& needle);

std::string set_placeholder(std::string text, const std::string& key, const std::string& value) {
    auto pos = text.find(key);
    if (pos == std::string::npos)
        throw std::invalid_argument("corpus: template is missing placeholder " + key + ": " + text);
    return text.replace(pos, key.size(), value);
}

const std::vector<std::string>& fixed_lexicon(const OpinionLexicon& ops, Polarity p) {
    switch (p) {
        case Polarity::positive: return ops.fixed_positive;
        case Polarity::negative: return ops.fixed_negative;
        case Polarity::neutral: return ops.fixed_neutral;
    }
    throw std::invalid_argument("unknown polarity value");
}

template <typename V>
const typename V::value_type& draw_from(const V& v, RngStream& rng, const char* what) {
    if (v.empty()) throw std::invalid_argument(std::string("corpus: template slot with empty lexicon: ") + what);
    return v[rng.uniform_index(v.size())];
}

void validate_spec(const CorpusSpec& spec) {
    if (spec.domains.empty()) throw std::invalid_argument("corpus: no domains");
    for (const auto& d : spec.domains) {
        if (d.aspects.empty()) throw std::invalid_argument("corpus: domain '" + d.tag + "' has no aspects");
        if (spec.contrast_pairs_per_domain > 0 && d.aspects.size() < 2)
            throw std::invalid_argument("corpus: contrastive sentences need at least two aspects in '" + d.tag + "'");
    }
    if (spec.contrast_pairs_per_domain > 0 && spec.contrast_templates.empty())
        throw std::invalid_argument("corpus: template slot with empty lexicon: contrast templates");
    if ((spec.scale_singles_per_domain > 0 || spec.fixed_singles_per_domain > 0) &&
        spec.single_templates.empty())
        throw std::invalid_argument("corpus: template slot with empty lexicon: single templates");
    if (spec.scale_singles_per_domain > 0 &&
        (spec.opinions.scale_high.empty() || spec.opinions.scale_low.empty()))
        throw std::invalid_argument("corpus: template slot with empty lexicon: scale opinions");

    // Filler and opinion words must never collide with aspect words, or the
    // first-occurrence scan could bind the label to the wrong span.
    {
        std::vector<std::vector<std::string>> aspect_seqs;
        for (const auto& d : spec.domains)
            for (const auto& a : d.aspects) aspect_seqs.push_back(tokenize(a.text));
        auto check_clean = [&](const std::vector<std::string>& texts, const char* what) {
            for (const auto& t : texts) {
                auto words = tokenize(t);
                for (const auto& seq : aspect_seqs)
                    if (contains_subsequence(words, seq))
                        throw std::invalid_argument(std::string("corpus: ") + what + " '" + t +
                                                    "' contains an aspect term");
            }
        };
        check_clean(spec.fillers, "filler");
        check_clean(spec.opinions.fixed_positive, "opinion");
        check_clean(spec.opinions.fixed_negative, "opinion");
        check_clean(spec.opinions.fixed_neutral, "opinion");
        check_clean(spec.opinions.scale_high, "opinion");
        check_clean(spec.opinions.scale_low, "opinion");
    }

    // Every domain needs a healthy share of aspect words no other domain uses,
    // otherwise out-of-domain transfer degenerates into memorization checks.
    if (spec.domains.size() >= 2) {
        for (size_t i = 0; i < spec.domains.size(); ++i) {
            std::set<std::string> own, others;
            for (const auto& a : spec.domains[i].aspects)
                for (const auto& w : tokenize(a.text)) own.insert(w);
            for (size_t j = 0; j < spec.domains.size(); ++j) {
                if (j == i) continue;
                for (const auto& a : spec.domains[j].aspects)
                    for (const auto& w : tokenize(a.text)) others.insert(w);
            }
            int unique = 0;
            for (const auto& w : own)
                if (!others.count(w)) ++unique;
            if (unique * 10 < static_cast<int>(own.size()) * 3)
                throw std::invalid_argument("corpus: domain '" + spec.domains[i].tag +
                                            "' has fewer than 30% unique aspect words");
        }
    }
}

struct SentencePool {
    std::set<std::string> used;
    bool insert(const std::string& s) { return used.insert(s).second; }
};

std::string maybe_filler(const CorpusSpec& spec, RngStream& rng, double prob) {
    if (spec.fillers.empty() || rng.uniform() >= prob) return "";
    return spec.fillers[rng.uniform_index(spec.fillers.size())] + " ";
}

bool contains_subsequence(const std::vector<std::string>& haystack,
                          const std::vector<std::string>& needle) {
    if (needle.empty() || needle.size() > haystack.size()) return false;
    for (size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
        bool match = true;
        for (size_t j = 0; j < needle.size(); ++j)
            if (haystack[i + j] != needle[j]) {
                match = false;
                break;
            }
        if (match) return true;
    }
    return false;
}

// "battery" inside "battery life" would make the first-occurrence scan land
// in the wrong clause, so such aspects never share a contrastive sentence.
bool aspects_overlap(const AspectEntry& a, const AspectEntry& b) {
    auto ta = tokenize(a.text), tb = tokenize(b.text);
    return contains_subsequence(ta, tb) || contains_subsequence(tb, ta);
}

}  // namespace

std::vector<Sample> generate_corpus(const CorpusSpec& spec) {
    validate_spec(spec);
    std::vector<Sample> out;
    RngStream root(RngPurpose::data_gen, spec.seed);

    const Polarity kPairTypes[3][2] = {
        {Polarity::positive, Polarity::negative},
        {Polarity::positive, Polarity::neutral},
        {Polarity::negative, Polarity::neutral},
    };

    for (size_t di = 0; di < spec.domains.size(); ++di) {
        const DomainSpec& dom = spec.domains[di];
        RngStream rng = root.substream(di);
        SentencePool pool;

        // contrastive pairs: a sample and its mirror share the sentence
        for (int i = 0; i < spec.contrast_pairs_per_domain; ++i) {
            const Polarity* type = kPairTypes[i % 3];
            bool flip = (i / 3) % 2 == 1;  // alternate which clause is first
            Polarity p1 = flip ? type[1] : type[0];
            Polarity p2 = flip ? type[0] : type[1];
            std::string sentence;
            const AspectEntry* a1 = nullptr;
            const AspectEntry* a2 = nullptr;
            for (int attempt = 0; attempt < 64; ++attempt) {
                a1 = &draw_from(dom.aspects, rng, "aspects");
                a2 = &draw_from(dom.aspects, rng, "aspects");
                if (a1->text == a2->text || aspects_overlap(*a1, *a2)) continue;
                const std::string& op1 = draw_from(fixed_lexicon(spec.opinions, p1), rng, "fixed opinions");
                const std::string& op2 = draw_from(fixed_lexicon(spec.opinions, p2), rng, "fixed opinions");
                const std::string& tmpl = draw_from(spec.contrast_templates, rng, "contrast templates");
                std::string body = set_placeholder(tmpl, "{a1}", a1->text);
                body = set_placeholder(body, "{op1}", op1);
                body = set_placeholder(body, "{a2}", a2->text);
                body = set_placeholder(body, "{op2}", op2);
                sentence = maybe_filler(spec, rng, 0.4) + body;
                if (pool.insert(sentence)) break;
            }
            if (a1->text == a2->text || aspects_overlap(*a1, *a2)) continue;  // degenerate lexicon
            out.push_back({sentence, a1->text, p1, dom.tag});
            out.push_back({sentence, a2->text, p2, dom.tag});
        }

        // scale singles: opinion polarity depends on the aspect
        for (int i = 0; i < spec.scale_singles_per_domain; ++i) {
            Polarity want = (i % 2 == 0) ? Polarity::positive : Polarity::negative;
            std::string sentence;
            const AspectEntry* a = nullptr;
            for (int attempt = 0; attempt < 64; ++attempt) {
                a = &draw_from(dom.aspects, rng, "aspects");
                bool high = (want == Polarity::positive) == a->amplitude_good;
                const auto& lex = high ? spec.opinions.scale_high : spec.opinions.scale_low;
                const std::string& op = draw_from(lex, rng, "scale opinions");
                const std::string& tmpl = draw_from(spec.single_templates, rng, "single templates");
                std::string body = set_placeholder(tmpl, "{a}", a->text);
                body = set_placeholder(body, "{op}", op);
                sentence = maybe_filler(spec, rng, 0.5) + body;
                if (pool.insert(sentence)) break;
            }
            out.push_back({sentence, a->text, want, dom.tag});
        }

        // fixed singles: weighted toward neutral so the corpus stays
        // class-balanced after the pos/neg-heavy scale singles
        int fixed = spec.fixed_singles_per_domain;
        int quota_posneg = std::max(0, fixed / 3 - spec.scale_singles_per_domain / 6);
        std::vector<Polarity> targets;
        for (int i = 0; i < quota_posneg; ++i) targets.push_back(Polarity::positive);
        for (int i = 0; i < quota_posneg; ++i) targets.push_back(Polarity::negative);
        while (static_cast<int>(targets.size()) < fixed) targets.push_back(Polarity::neutral);
        for (int i = 0; i < fixed; ++i) {
            Polarity want = targets[static_cast<size_t>(i)];
            if (fixed_lexicon(spec.opinions, want).empty()) {
                if (!spec.opinions.fixed_positive.empty()) want = Polarity::positive;
                else if (!spec.opinions.fixed_negative.empty()) want = Polarity::negative;
                else want = Polarity::neutral;
            }
            std::string sentence;
            const AspectEntry* a = nullptr;
            for (int attempt = 0; attempt < 64; ++attempt) {
                a = &draw_from(dom.aspects, rng, "aspects");
                const std::string& op = draw_from(fixed_lexicon(spec.opinions, want), rng, "fixed opinions");
                const std::string& tmpl = draw_from(spec.single_templates, rng, "single templates");
                std::string body = set_placeholder(tmpl, "{a}", a->text);
                body = set_placeholder(body, "{op}", op);
                sentence = maybe_filler(spec, rng, 0.5) + body;
                if (pool.insert(sentence)) break;
            }
            out.push_back({sentence, a->text, want, dom.tag});
        }
    }
    return out;
}

// ---------------------------------------------------------------- rendering

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(current);
            current.clear();
        }
    };
    for (char raw : text) {
        char c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '\'') {
            current.push_back(c);
        } else {
            flush();
            tokens.push_back(std::string(1, c));
        }
    }
    flush();
    return tokens;
}

PromptTemplate default_prompt_template() {
    return {0, "review : {S} . aspect : {A} . sentiment :"};
}

namespace {

struct TemplateParts {
    std::vector<std::string> pre, mid, post;  // token chunks around {S} and {A}
};

TemplateParts parse_template(const PromptTemplate& tmpl) {
    auto s_pos = tmpl.text.find("{S}");
    auto a_pos = tmpl.text.find("{A}");
    if (s_pos == std::string::npos || a_pos == std::string::npos || a_pos < s_pos)
        throw std::invalid_argument("prompt template must contain {S} then {A}: " + tmpl.text);
    TemplateParts parts;
    parts.pre = tokenize(tmpl.text.substr(0, s_pos));
    parts.mid = tokenize(tmpl.text.substr(s_pos + 3, a_pos - s_pos - 3));
    parts.post = tokenize(tmpl.text.substr(a_pos + 3));
    return parts;
}

}  // namespace

Vocab build_vocab(const std::vector<Sample>& corpus,
                  const std::vector<PromptTemplate>& templates, int max_vocab) {
    if (corpus.empty()) throw std::invalid_argument("build_vocab: empty corpus");
    Vocab vocab;
    // verbalizer words first so label ids are stable and low
    for (const char* w : {"positive", "negative", "neutral"}) vocab.add(w);
    for (const auto& tmpl : templates) {
        auto parts = parse_template(tmpl);
        for (const auto& chunk : {parts.pre, parts.mid, parts.post})
            for (const auto& w : chunk) vocab.add(w);
    }
    for (const auto& s : corpus) {
        for (const auto& w : tokenize(s.sentence)) vocab.add(w);
        for (const auto& w : tokenize(s.aspect)) vocab.add(w);
    }
    if (vocab.size() > max_vocab)
        throw std::invalid_argument("build_vocab: vocabulary size " + std::to_string(vocab.size()) +
                                    " exceeds the configured bound " + std::to_string(max_vocab));
    return vocab;
}

Verbalizer verbalizer_for(const Vocab& vocab) {
    Verbalizer v;
    v.positive_id = vocab.id("positive");
    v.negative_id = vocab.id("negative");
    v.neutral_id = vocab.id("neutral");
    for (int id : {v.positive_id, v.negative_id, v.neutral_id})
        if (id == Vocab::kUnk) throw std::invalid_argument("verbalizer words missing from vocabulary");
    return v;
}

PromptRendering render_prompt(const Sample& sample, int sample_id, const Vocab& vocab,
                              const PromptTemplate& tmpl, int max_len) {
    auto parts = parse_template(tmpl);
    auto sentence_tokens = tokenize(sample.sentence);
    auto aspect_tokens = tokenize(sample.aspect);
    if (aspect_tokens.empty()) throw std::invalid_argument("render_prompt: empty aspect");

    // first occurrence of the aspect inside the sentence copy
    int found = -1;
    for (size_t i = 0; i + aspect_tokens.size() <= sentence_tokens.size(); ++i) {
        bool match = true;
        for (size_t j = 0; j < aspect_tokens.size(); ++j)
            if (sentence_tokens[i + j] != aspect_tokens[j]) {
                match = false;
                break;
            }
        if (match) {
            found = static_cast<int>(i);
            break;
        }
    }
    if (found < 0)
        throw std::invalid_argument("render_prompt: aspect '" + sample.aspect +
                                    "' does not occur in sentence '" + sample.sentence + "'");

    PromptRendering r;
    r.template_id = tmpl.id;
    r.sample_id = sample_id;
    auto push_words = [&](const std::vector<std::string>& ws) {
        for (const auto& w : ws) r.tokens.push_back(vocab.id(w));
    };
    push_words(parts.pre);
    int sentence_start = static_cast<int>(r.tokens.size());  // 0-based index of first sentence token
    push_words(sentence_tokens);
    push_words(parts.mid);
    push_words(aspect_tokens);
    push_words(parts.post);

    for (size_t j = 0; j < aspect_tokens.size(); ++j)
        r.aspect_positions.push_back(sentence_start + found + static_cast<int>(j) + 1);  // 1-based

    r.gold_token = vocab.id(to_string(sample.polarity));
    if (static_cast<int>(r.tokens.size()) + 1 > max_len)
        throw std::invalid_argument("render_prompt: prompt length " + std::to_string(r.tokens.size() + 1) +
                                    " exceeds the maximum " + std::to_string(max_len));
    return r;
}

std::vector<PromptRendering> render_corpus(const std::vector<Sample>& corpus, const Vocab& vocab,
                                           const PromptTemplate& tmpl, int max_len) {
    std::vector<PromptRendering> out;
    out.reserve(corpus.size());
    for (size_t i = 0; i < corpus.size(); ++i)
        out.push_back(render_prompt(corpus[i], static_cast<int>(i), vocab, tmpl, max_len));
    return out;
}

// ------------------------------------------------------------------- splits

namespace {

// Sentence groups per domain in first-appearance order; mirrors share groups.
std::vector<int> sentence_groups(const std::vector<Sample>& corpus) {
    std::map<std::pair<std::string, std::string>, int> key_to_group;
    std::map<std::string, int> domain_counters;
    std::vector<int> group_of(corpus.size());
    for (size_t i = 0; i < corpus.size(); ++i) {
        auto key = std::make_pair(corpus[i].domain, corpus[i].sentence);
        auto it = key_to_group.find(key);
        if (it == key_to_group.end()) {
            int index_in_domain = domain_counters[corpus[i].domain]++;
            it = key_to_group.emplace(key, index_in_domain).first;
        }
        group_of[i] = it->second;
    }
    return group_of;
}

}  // namespace

std::vector<bool> contrastive_mask(const std::vector<Sample>& corpus) {
    std::map<std::pair<std::string, std::string>, std::set<std::string>> aspects_of;
    for (const auto& s : corpus) aspects_of[{s.domain, s.sentence}].insert(s.aspect);
    std::vector<bool> mask(corpus.size());
    for (size_t i = 0; i < corpus.size(); ++i)
        mask[i] = aspects_of[{corpus[i].domain, corpus[i].sentence}].size() >= 2;
    return mask;
}

std::vector<bool> test_mask(const std::vector<Sample>& corpus) {
    auto group_of = sentence_groups(corpus);
    std::vector<bool> mask(corpus.size());
    for (size_t i = 0; i < corpus.size(); ++i) mask[i] = group_of[i] % 5 == 4;
    return mask;
}

std::vector<std::string> domain_tags(const std::vector<Sample>& corpus) {
    std::vector<std::string> tags;
    for (const auto& s : corpus)
        if (std::find(tags.begin(), tags.end(), s.domain) == tags.end()) tags.push_back(s.domain);
    return tags;
}

SplitResult split_domains(const std::vector<Sample>& corpus, const std::string& in_domain,
                          const std::string& out_domain) {
    auto tags = domain_tags(corpus);
    for (const auto& tag : {in_domain, out_domain})
        if (std::find(tags.begin(), tags.end(), tag) == tags.end())
            throw std::invalid_argument("split_domains: unknown domain '" + tag + "'");
    auto is_test = test_mask(corpus);
    SplitResult r;
    r.in_domain_pair = (in_domain == out_domain);
    for (size_t i = 0; i < corpus.size(); ++i) {
        int id = static_cast<int>(i);
        if (corpus[i].domain == in_domain) {
            if (is_test[i]) r.in_test.push_back(id);
            else r.train.push_back(id);
        }
        if (corpus[i].domain == out_domain && is_test[i]) r.out_test.push_back(id);
    }
    return r;
}

std::vector<int> base_training_ids(const std::vector<Sample>& corpus) {
    auto is_test = test_mask(corpus);
    auto is_contrastive = contrastive_mask(corpus);
    std::vector<int> ids;
    for (size_t i = 0; i < corpus.size(); ++i)
        if (!is_test[i] && !is_contrastive[i]) ids.push_back(static_cast<int>(i));
    return ids;
}

// --------------------------------------------------------------------- IO

void save_corpus_jsonl(const std::string& path, const std::vector<Sample>& corpus) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("corpus: cannot open '" + path + "' for writing");
    for (const auto& s : corpus) {
        nlohmann::json j = {{"sentence", s.sentence},
                            {"aspect", s.aspect},
                            {"polarity", to_string(s.polarity)},
                            {"domain", s.domain}};
        out << j.dump() << '\n';
    }
    if (!out) throw std::runtime_error("corpus: write failed for '" + path + "'");
}

std::vector<Sample> load_corpus_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("corpus: cannot open '" + path + "'");
    std::vector<Sample> corpus;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw std::runtime_error("corpus: invalid JSON at " + path + ":" + std::to_string(lineno));
        corpus.push_back({j.at("sentence").get<std::string>(), j.at("aspect").get<std::string>(),
                          polarity_from_string(j.at("polarity").get<std::string>()),
                          j.at("domain").get<std::string>()});
    }
    return corpus;
}

void save_renderings_jsonl(const std::string& path, const std::vector<PromptRendering>& renderings) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("renderings: cannot open '" + path + "' for writing");
    for (const auto& r : renderings) {
        nlohmann::json j = {{"sample_id", r.sample_id},
                            {"tokens", r.tokens},
                            {"aspect_positions", r.aspect_positions},
                            {"gold_token", r.gold_token},
                            {"template_id", r.template_id}};
        out << j.dump() << '\n';
    }
}

}  // namespace tracedit
