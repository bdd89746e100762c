#include "dynmf/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace dynmf::corpus {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool valid_ymd(int y, int m, int d) {
    if (m < 1 || m > 12 || d < 1) return false;
    static const int len[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int max_d = len[m - 1];
    bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    if (m == 2 && leap) max_d = 29;
    return d <= max_d;
}

}  // namespace

std::optional<Date> Date::parse(std::string_view iso) {
    if (iso.size() < 10) return std::nullopt;
    for (int i : {0, 1, 2, 3, 5, 6, 8, 9})
        if (!is_digit(iso[i])) return std::nullopt;
    if (iso[4] != '-' || iso[7] != '-') return std::nullopt;
    if (iso.size() > 10 && iso[10] != 'T' && iso[10] != ' ') return std::nullopt;
    Date d;
    d.year = (iso[0] - '0') * 1000 + (iso[1] - '0') * 100 + (iso[2] - '0') * 10 + (iso[3] - '0');
    d.month = (iso[5] - '0') * 10 + (iso[6] - '0');
    d.day = (iso[8] - '0') * 10 + (iso[9] - '0');
    if (!valid_ymd(d.year, d.month, d.day)) return std::nullopt;
    return d;
}

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
}

long Date::day_number() const {
    // Howard Hinnant's civil-days algorithm.
    int y = year - (month <= 2);
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(month + (month > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(day) - 1u;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

Corpus load_corpus(const std::string& path, CorpusFormat format) {
    if (format != CorpusFormat::Jsonl)
        throw std::invalid_argument("load_corpus: unsupported corpus format");
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_corpus: cannot open " + path);

    Corpus corpus;
    std::set<std::string> seen_ids;
    std::size_t records = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++records;
        auto reject = [&](const char* why) {
            std::cerr << "[warn] " << path << ":" << line_no << ": skipping record (" << why
                      << ")\n";
            ++corpus.skipped;
        };
        nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object()) {
            reject("not a JSON object");
            continue;
        }
        std::string id;
        if (rec.contains("id") && rec["id"].is_string())
            id = rec["id"].get<std::string>();
        else if (rec.contains("id") && rec["id"].is_number_integer())
            id = std::to_string(rec["id"].get<long long>());
        if (id.empty()) {
            reject("missing id");
            continue;
        }
        if (!rec.contains("date") || !rec["date"].is_string()) {
            reject("missing date");
            continue;
        }
        auto date = Date::parse(rec["date"].get<std::string>());
        if (!date) {
            reject("unparseable date");
            continue;
        }
        if (!rec.contains("text") || !rec["text"].is_string()) {
            reject("missing text");
            continue;
        }
        if (!seen_ids.insert(id).second) {
            reject("duplicate id");
            continue;
        }
        Speech s;
        s.id = std::move(id);
        s.date = *date;
        s.text = rec["text"].get<std::string>();
        if (rec.contains("speaker_id") && rec["speaker_id"].is_string())
            s.speaker_id = rec["speaker_id"].get<std::string>();
        corpus.speeches.push_back(std::move(s));
    }
    if (records == 0)
        std::cerr << "[warn] " << path << ": empty corpus\n";
    else if (corpus.skipped * 2 > records)
        throw std::runtime_error("load_corpus: more than half of " + path + " is malformed (" +
                                 std::to_string(corpus.skipped) + "/" + std::to_string(records) +
                                 ")");
    std::stable_sort(corpus.speeches.begin(), corpus.speeches.end(),
                     [](const Speech& a, const Speech& b) { return a.date < b.date; });
    return corpus;
}

int TimeWindowSpec::window_index(const Date& d) const {
    if (d < start || end < d) return -1;
    switch (granularity) {
        case Granularity::Quarter:
            return (d.year * 4 + d.quarter()) - (start.year * 4 + start.quarter());
        case Granularity::Month:
            return (d.year * 12 + d.month) - (start.year * 12 + start.month);
        case Granularity::Year:
            return d.year - start.year;
        case Granularity::FixedDays:
            if (fixed_days < 1)
                throw std::invalid_argument("TimeWindowSpec: fixed_days must be >= 1");
            return static_cast<int>((d.day_number() - start.day_number()) / fixed_days);
    }
    return -1;
}

int TimeWindowSpec::window_count() const {
    if (end < start) throw std::invalid_argument("TimeWindowSpec: end precedes start");
    TimeWindowSpec s = *this;
    return s.window_index(end) + 1;
}

std::string TimeWindowSpec::window_label(int index) const {
    char buf[32];
    switch (granularity) {
        case Granularity::Quarter: {
            int q0 = start.year * 4 + (start.quarter() - 1) + index;
            std::snprintf(buf, sizeof(buf), "%04d-Q%d", q0 / 4, q0 % 4 + 1);
            break;
        }
        case Granularity::Month: {
            int m0 = start.year * 12 + (start.month - 1) + index;
            std::snprintf(buf, sizeof(buf), "%04d-M%02d", m0 / 12, m0 % 12 + 1);
            break;
        }
        case Granularity::Year:
            std::snprintf(buf, sizeof(buf), "%04d", start.year + index);
            break;
        case Granularity::FixedDays:
            std::snprintf(buf, sizeof(buf), "D%04d", index);
            break;
    }
    return buf;
}

TimeWindowSpec TimeWindowSpec::covering(const Corpus& corpus, Granularity g, int fixed_days) {
    if (corpus.empty()) throw std::invalid_argument("TimeWindowSpec::covering: empty corpus");
    TimeWindowSpec spec;
    spec.granularity = g;
    spec.fixed_days = fixed_days;
    spec.start = corpus.speeches.front().date;
    spec.end = corpus.speeches.back().date;
    return spec;
}

std::vector<WindowPartition> partition_windows(const Corpus& corpus, const TimeWindowSpec& spec) {
    if (corpus.empty()) throw std::invalid_argument("partition_windows: empty corpus");
    const int count = spec.window_count();
    std::vector<WindowPartition> windows(static_cast<std::size_t>(count));
    for (int w = 0; w < count; ++w) {
        windows[w].window_id = w;
        windows[w].label = spec.window_label(w);
    }
    for (const Speech& s : corpus.speeches) {
        int w = spec.window_index(s.date);
        if (w < 0)
            throw std::out_of_range("partition_windows: speech " + s.id + " dated " +
                                    s.date.to_string() + " outside window span");
        windows[static_cast<std::size_t>(w)].speech_ids.push_back(s.id);
    }
    for (const auto& w : windows)
        if (w.empty()) std::cerr << "[warn] window " << w.label << " is empty\n";
    return windows;
}

namespace {

// Pragmatic Unicode-alphabetic test: ASCII letters plus the Latin-1/Latin
// Extended, Greek and Cyrillic letter ranges. The corpus contract restricts
// input to English, so ASCII dominates; accented names still tokenize.
bool is_letter_cp(char32_t cp) {
    if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z')) return true;
    if (cp == 0xD7 || cp == 0xF7) return false;  // multiplication/division signs
    if (cp >= 0xC0 && cp <= 0x24F) return true;
    if (cp >= 0x386 && cp <= 0x3FF && cp != 0x387) return true;
    if (cp >= 0x400 && cp <= 0x4FF) return true;
    return false;
}

char32_t lower_cp(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 32;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
    return cp;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// Decodes the next UTF-8 codepoint; malformed bytes come back as U+FFFD and
// act as separators.
char32_t next_cp(std::string_view s, std::size_t& i) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (c < 0x80) {
        ++i;
        return c;
    }
    int extra = 0;
    char32_t cp = 0;
    if ((c & 0xE0) == 0xC0) {
        extra = 1;
        cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
        extra = 2;
        cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
        extra = 3;
        cp = c & 0x07;
    } else {
        ++i;
        return 0xFFFD;
    }
    if (i + extra >= s.size()) {
        ++i;
        return 0xFFFD;
    }
    for (int k = 1; k <= extra; ++k) {
        unsigned char cc = static_cast<unsigned char>(s[i + k]);
        if ((cc & 0xC0) != 0x80) {
            ++i;
            return 0xFFFD;
        }
        cp = (cp << 6) | (cc & 0x3F);
    }
    i += 1 + extra;
    return cp;
}

// Harman S-stemmer: conflates plural forms only.
std::string s_stem(const std::string& t) {
    auto ends = [&](const char* suf) {
        std::size_t n = std::strlen(suf);
        return t.size() >= n && t.compare(t.size() - n, n, suf) == 0;
    };
    if (t.size() > 4 && ends("ies") && !ends("eies") && !ends("aies"))
        return t.substr(0, t.size() - 3) + "y";
    if (t.size() > 3 && ends("es") && !ends("aes") && !ends("ees") && !ends("oes"))
        return t.substr(0, t.size() - 1);
    if (t.size() > 3 && ends("s") && !ends("us") && !ends("ss"))
        return t.substr(0, t.size() - 1);
    return t;
}

std::size_t cp_length(std::string_view token) {
    std::size_t n = 0;
    for (char c : token)
        if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
    return n;
}

const char* kDefaultStopwords[] = {
    "about", "above", "after", "again", "against", "all", "also", "although", "among", "and",
    "any", "are", "aren", "because", "been", "before", "being", "below", "between", "both",
    "but", "can", "cannot", "could", "couldn", "did", "didn", "does", "doesn", "doing", "don",
    "down", "during", "each", "either", "else", "ever", "every", "few", "for", "from",
    "further", "had", "hadn", "has", "hasn", "have", "haven", "having", "her", "here", "hers",
    "herself", "him", "himself", "his", "how", "however", "into", "isn", "its", "itself",
    "just", "let", "many", "may", "might", "more", "most", "much", "must", "mustn", "myself",
    "neither", "nor", "not", "now", "off", "once", "only", "onto", "other", "others", "ought",
    "our", "ours", "ourselves", "out", "over", "own", "per", "same", "shall", "shan", "she",
    "should", "shouldn", "since", "some", "still", "such", "than", "that", "the", "their",
    "theirs", "them", "themselves", "then", "there", "therefore", "these", "they", "this",
    "those", "through", "thus", "too", "under", "until", "upon", "very", "was", "wasn", "were",
    "weren", "what", "when", "where", "whether", "which", "while", "who", "whom", "whose",
    "why", "will", "with", "within", "without", "won", "would", "wouldn", "yet", "you", "your",
    "yours", "yourself", "yourselves"};

// Illustrative parliamentary terms only; production runs load a curated list.
const char* kDefaultParliamentaryStopwords[] = {
    "adjourn", "adjourned", "adjournment", "agenda",  "applause",
    "comment", "comments",  "sitting",     "sittings"};

}  // namespace

PreprocessConfig PreprocessConfig::defaults() {
    PreprocessConfig config;
    for (const char* w : kDefaultStopwords) config.stopwords.insert(w);
    for (const char* w : kDefaultParliamentaryStopwords) config.extra_stopwords.insert(w);
    return config;
}

std::vector<std::string> tokenize(std::string_view text, const PreprocessConfig& config) {
    if (config.min_token_len < 1)
        throw std::invalid_argument("PreprocessConfig: min_token_len must be >= 1");
    std::vector<std::string> tokens;
    std::string current;
    std::size_t i = 0;
    auto flush = [&] {
        if (current.empty()) return;
        std::string token = std::move(current);
        current.clear();
        if (config.normalizer == Normalizer::SuffixStemmer) {
            token = s_stem(token);
        } else if (config.normalizer == Normalizer::LemmaDictionary) {
            auto it = config.lemma_dictionary.find(token);
            if (it != config.lemma_dictionary.end()) token = it->second;
        }
        if (cp_length(token) < static_cast<std::size_t>(config.min_token_len)) return;
        if (config.is_stopword(token)) return;
        tokens.push_back(std::move(token));
    };
    while (i < text.size()) {
        char32_t cp = next_cp(text, i);
        if (is_letter_cp(cp))
            append_utf8(current, lower_cp(cp));
        else
            flush();
    }
    flush();
    return tokens;
}

std::vector<TokenizedDoc> preprocess(const std::vector<Speech>& speeches,
                                     const PreprocessConfig& config) {
    std::vector<TokenizedDoc> docs;
    docs.reserve(speeches.size());
    for (const Speech& s : speeches) docs.push_back({s.id, tokenize(s.text, config)});
    return docs;
}

DocTermMatrix build_matrix(const std::vector<TokenizedDoc>& docs, const PreprocessConfig& config,
                           int window_id) {
    if (config.min_doc_freq < 1)
        throw std::invalid_argument("PreprocessConfig: min_doc_freq must be >= 1");
    DocTermMatrix matrix;
    matrix.window_id = window_id;

    std::vector<const TokenizedDoc*> live;
    for (const TokenizedDoc& d : docs) {
        if (d.droppable())
            matrix.dropped.push_back(d.id);
        else
            live.push_back(&d);
    }
    if (live.empty())
        throw DegenerateWindowError("window " + std::to_string(window_id) +
                                    ": all documents empty after preprocessing");

    const double n_docs = static_cast<double>(live.size());
    std::unordered_map<std::string, int> df;
    for (const TokenizedDoc* d : live) {
        std::set<std::string> uniq(d->tokens.begin(), d->tokens.end());
        for (const auto& t : uniq) ++df[t];
    }
    for (const auto& [term, count] : df)
        if (count >= config.min_doc_freq) matrix.terms.push_back(term);
    std::sort(matrix.terms.begin(), matrix.terms.end());
    if (matrix.terms.empty())
        throw DegenerateWindowError("window " + std::to_string(window_id) +
                                    ": no term passes the document-frequency filter");
    std::unordered_map<std::string, int> col;
    for (std::size_t j = 0; j < matrix.terms.size(); ++j)
        col[matrix.terms[j]] = static_cast<int>(j);

    std::vector<Eigen::Triplet<double>> entries;
    int row = 0;
    for (const TokenizedDoc* d : live) {
        std::map<int, double> weights;
        for (const auto& t : d->tokens) {
            auto it = col.find(t);
            if (it == col.end()) continue;
            double idf = std::log(n_docs / df[t]);
            weights[it->second] += idf;  // tf accumulates one idf per occurrence
        }
        double sq = 0.0;
        for (const auto& [c, w] : weights) sq += w * w;
        if (sq <= 0.0) {
            matrix.dropped.push_back(d->id);
            continue;
        }
        const double inv = 1.0 / std::sqrt(sq);
        for (const auto& [c, w] : weights)
            if (w > 0.0) entries.emplace_back(row, c, w * inv);
        matrix.row_ids.push_back(d->id);
        ++row;
    }
    if (matrix.row_ids.empty())
        throw DegenerateWindowError("window " + std::to_string(window_id) +
                                    ": every row is zero after TF-IDF weighting");
    matrix.values.resize(static_cast<Eigen::Index>(matrix.row_ids.size()),
                         static_cast<Eigen::Index>(matrix.terms.size()));
    matrix.values.setFromTriplets(entries.begin(), entries.end());
    matrix.values.makeCompressed();
    return matrix;
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& l : lines) out << l << '\n';
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

}  // namespace

void save_matrix(const DocTermMatrix& matrix, const std::string& prefix) {
    std::ofstream out(prefix + ".mtx");
    if (!out) throw std::runtime_error("cannot write " + prefix + ".mtx");
    out << matrix.rows() << ' ' << matrix.cols() << ' ' << matrix.values.nonZeros() << ' '
        << matrix.window_id << '\n';
    for (int k = 0; k < matrix.values.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(matrix.values, k); it; ++it)
            out << it.row() << ' ' << it.col() << ' ' << fmt_double(it.value()) << '\n';
    write_lines(prefix + ".terms.txt", matrix.terms);
    write_lines(prefix + ".rows.txt", matrix.row_ids);
    write_lines(prefix + ".dropped.txt", matrix.dropped);
}

DocTermMatrix load_matrix(const std::string& prefix) {
    std::ifstream in(prefix + ".mtx");
    if (!in) throw std::runtime_error("cannot read " + prefix + ".mtx");
    DocTermMatrix matrix;
    Eigen::Index rows, cols;
    std::size_t nnz;
    if (!(in >> rows >> cols >> nnz >> matrix.window_id))
        throw std::runtime_error(prefix + ".mtx: bad header");
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(nnz);
    Eigen::Index r, c;
    double v;
    while (in >> r >> c >> v) entries.emplace_back(r, c, v);
    if (entries.size() != nnz) throw std::runtime_error(prefix + ".mtx: truncated triplets");
    matrix.values.resize(rows, cols);
    matrix.values.setFromTriplets(entries.begin(), entries.end());
    matrix.values.makeCompressed();
    matrix.terms = read_lines(prefix + ".terms.txt");
    matrix.row_ids = read_lines(prefix + ".rows.txt");
    matrix.dropped = read_lines(prefix + ".dropped.txt");
    if (static_cast<Eigen::Index>(matrix.terms.size()) != cols ||
        static_cast<Eigen::Index>(matrix.row_ids.size()) != rows)
        throw std::runtime_error(prefix + ": dictionary/rows sidecar does not match header");
    return matrix;
}

std::set<std::string> load_term_set(const std::string& path) {
    std::set<std::string> terms;
    PreprocessConfig raw;  // tokenize with no filtering to normalize case
    raw.min_token_len = 1;
    for (const auto& line : read_lines(path)) {
        for (auto& t : tokenize(line, raw)) terms.insert(std::move(t));
    }
    return terms;
}

std::map<std::string, std::string> load_lemma_dictionary(const std::string& path) {
    std::map<std::string, std::string> dict;
    for (const auto& line : read_lines(path)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string from, to;
        if (ss >> from >> to) dict[from] = to;
    }
    return dict;
}

}  // namespace dynmf::corpus
