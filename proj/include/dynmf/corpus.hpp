// Timestamped speech corpora: loading, time-window partitioning and
// per-window TF-IDF speech-term matrices.

#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/SparseCore>

namespace dynmf::corpus {

struct Date {
    int year = 0;
    int month = 1;
    int day = 1;

    auto operator<=>(const Date&) const = default;

    // Strict YYYY-MM-DD; a trailing "T..." time part is accepted and ignored.
    static std::optional<Date> parse(std::string_view iso);

    std::string to_string() const;

    int quarter() const { return (month - 1) / 3 + 1; }

    // Days since 1970-01-01 (proleptic Gregorian).
    long day_number() const;
};

struct Speech {
    std::string id;
    Date date;
    std::string speaker_id;  // may be empty
    std::string text;
};

struct Corpus {
    std::vector<Speech> speeches;  // sorted by date, input order preserved within a day
    std::size_t skipped = 0;       // malformed records dropped during loading

    bool empty() const { return speeches.empty(); }
    std::size_t size() const { return speeches.size(); }
};

enum class CorpusFormat { Jsonl };

// JSON-lines, one object per speech with keys "id", "date", optional
// "speaker_id", "text". Malformed records are skipped and counted; more than
// half malformed is an error.
Corpus load_corpus(const std::string& path, CorpusFormat format = CorpusFormat::Jsonl);

enum class Granularity { Quarter, Month, Year, FixedDays };

struct TimeWindowSpec {
    Granularity granularity = Granularity::Quarter;
    Date start;
    Date end;
    int fixed_days = 0;  // window length when granularity == FixedDays

    int window_count() const;
    // Index of the window containing d, or -1 if d lies outside [start, end].
    int window_index(const Date& d) const;
    std::string window_label(int index) const;

    // Span taken from the first and last speech of the corpus.
    static TimeWindowSpec covering(const Corpus& corpus, Granularity g, int fixed_days = 0);
};

struct WindowPartition {
    int window_id = 0;
    std::string label;
    std::vector<std::string> speech_ids;  // chronological
    bool empty() const { return speech_ids.empty(); }
};

// Every speech lands in exactly one window; empty windows are retained.
// A speech dated outside the spec's span is an error.
std::vector<WindowPartition> partition_windows(const Corpus& corpus, const TimeWindowSpec& spec);

enum class Normalizer { Identity, SuffixStemmer, LemmaDictionary };

struct PreprocessConfig {
    int min_token_len = 3;
    int min_doc_freq = 5;
    std::set<std::string> stopwords;
    std::set<std::string> extra_stopwords;  // domain-specific
    std::set<std::string> blocked_names;
    Normalizer normalizer = Normalizer::Identity;
    std::map<std::string, std::string> lemma_dictionary;

    bool is_stopword(const std::string& t) const {
        return stopwords.count(t) || extra_stopwords.count(t) || blocked_names.count(t);
    }

    // Built-in English stopword list plus a small illustrative set of
    // parliamentary terms; real deployments should supply their own lists.
    static PreprocessConfig defaults();
};

struct TokenizedDoc {
    std::string id;
    std::vector<std::string> tokens;

    bool droppable() const { return tokens.empty(); }
};

// Lowercased alphabetic runs (digits/punctuation separate), normalized, then
// filtered by length and the stopword/name sets.
std::vector<std::string> tokenize(std::string_view text, const PreprocessConfig& config);

std::vector<TokenizedDoc> preprocess(const std::vector<Speech>& speeches,
                                     const PreprocessConfig& config);

class DegenerateWindowError : public std::runtime_error {
public:
    explicit DegenerateWindowError(const std::string& what) : std::runtime_error(what) {}
};

struct DocTermMatrix {
    int window_id = 0;
    std::vector<std::string> row_ids;   // retained speech ids
    std::vector<std::string> terms;     // lexicographic column order
    Eigen::SparseMatrix<double> values; // rows L2-normalized, entries >= 0
    std::vector<std::string> dropped;   // speeches empty after filtering or all-zero

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
};

// TF-IDF with tf = raw count, idf = ln(n/df) computed within the window,
// then L2 row normalization. Columns require document frequency >=
// config.min_doc_freq. Throws DegenerateWindowError when nothing survives.
DocTermMatrix build_matrix(const std::vector<TokenizedDoc>& docs,
                           const PreprocessConfig& config, int window_id = 0);

// Sparse triplet serialization: <prefix>.mtx plus .terms.txt / .rows.txt /
// .dropped.txt sidecars. Byte-identical for identical input.
void save_matrix(const DocTermMatrix& matrix, const std::string& prefix);
DocTermMatrix load_matrix(const std::string& prefix);

// One term per line, UTF-8, lowercased on load.
std::set<std::string> load_term_set(const std::string& path);
std::map<std::string, std::string> load_lemma_dictionary(const std::string& path);

}  // namespace dynmf::corpus
