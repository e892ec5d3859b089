#include "memefuse/embedding.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "memefuse/error.hpp"
#include "memefuse/preprocess.hpp"

#include "json.hpp"

namespace memefuse {

namespace {

std::string read_file(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(std::string(what) + ": cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

EmbeddingTable EmbeddingTable::load(const std::string& path) {
    return parse(read_file(path, "embeddings"), path);
}

EmbeddingTable EmbeddingTable::parse(const std::string& content, const std::string& origin) {
    EmbeddingTable table;
    std::vector<double> values;
    std::istringstream in(content);
    std::string line;
    std::size_t lineno = 0;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string token;
        ls >> token;
        std::vector<double> row;
        double v;
        while (ls >> v) row.push_back(v);
        if (!ls.eof()) {
            throw DataError("embeddings: " + origin + ":" + std::to_string(lineno) +
                            ": malformed float");
        }
        if (row.empty()) {
            throw DataError("embeddings: " + origin + ":" + std::to_string(lineno) +
                            ": no values after token");
        }
        if (table.dim_ == 0) {
            table.dim_ = row.size();
        } else if (row.size() != table.dim_) {
            throw DataError("embeddings: " + origin + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(table.dim_) + " values, got " +
                            std::to_string(row.size()));
        }
        if (!table.vocab_.emplace(token, rows).second) {
            throw DataError("embeddings: " + origin + ":" + std::to_string(lineno) +
                            ": duplicate token '" + token + "'");
        }
        values.insert(values.end(), row.begin(), row.end());
        ++rows;
    }
    if (rows == 0) throw DataError("embeddings: " + origin + ": empty file");

    auto unk = table.vocab_.find(kUnkToken);
    if (unk == table.vocab_.end()) {
        table.vocab_.emplace(kUnkToken, rows);
        table.unk_index_ = rows;
        values.insert(values.end(), table.dim_, 0.0);  // neutral zero row
        ++rows;
    } else {
        table.unk_index_ = unk->second;
    }
    table.matrix_ = Tensor({rows, table.dim_}, std::move(values));
    return table;
}

void EmbeddingTable::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("embeddings: cannot write " + path);
    for (const auto& [token, index] : vocab_) {
        out << token;
        for (std::size_t j = 0; j < dim_; ++j) out << ' ' << fmt_double(matrix_.at(index, j));
        out << '\n';
    }
}

std::size_t EmbeddingTable::row_index(const std::string& token) const {
    auto it = vocab_.find(token);
    return it == vocab_.end() ? unk_index_ : it->second;
}

Tensor EmbeddingTable::lookup(const std::vector<std::string>& tokens) const {
    if (tokens.empty()) throw UsageError("EmbeddingTable::lookup: empty token sequence");
    Tensor out({tokens.size(), dim_});
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        std::size_t r = row_index(tokens[t]);
        for (std::size_t j = 0; j < dim_; ++j) out.at(t, j) = matrix_.at(r, j);
    }
    return out;
}

Tensor EmbeddingTable::row(std::size_t index) const {
    Tensor out({dim_});
    for (std::size_t j = 0; j < dim_; ++j) out[j] = matrix_.at(index, j);
    return out;
}

VectorStore VectorStore::load(const std::string& path) {
    return parse(read_file(path, "vector store"), path);
}

VectorStore VectorStore::parse(const std::string& content, const std::string& origin) {
    VectorStore store;
    std::istringstream in(content);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("vec") ||
            !j["id"].is_string() || !j["vec"].is_array()) {
            throw DataError("vector store: " + origin + ":" + std::to_string(lineno) +
                            ": expected {\"id\": ..., \"vec\": [...]}");
        }
        std::vector<double> vec;
        for (const auto& e : j["vec"]) {
            if (!e.is_number()) {
                throw DataError("vector store: " + origin + ":" + std::to_string(lineno) +
                                ": non-numeric vec entry");
            }
            vec.push_back(e.get<double>());
        }
        if (vec.empty()) {
            throw DataError("vector store: " + origin + ":" + std::to_string(lineno) +
                            ": empty vec");
        }
        if (store.dim_ == 0) {
            store.dim_ = vec.size();
        } else if (vec.size() != store.dim_) {
            throw DataError("vector store: " + origin + ":" + std::to_string(lineno) +
                            ": expected dim " + std::to_string(store.dim_) + ", got " +
                            std::to_string(vec.size()));
        }
        std::string id = j["id"].get<std::string>();
        if (store.vectors_.count(id)) {
            throw DataError("vector store: " + origin + ":" + std::to_string(lineno) +
                            ": duplicate id '" + id + "'");
        }
        store.vectors_.emplace(std::move(id), Tensor::vector(std::move(vec)));
    }
    return store;
}

const Tensor& VectorStore::get(const std::string& id) const {
    auto it = vectors_.find(id);
    if (it == vectors_.end()) throw DataError("vector store: no vector for id '" + id + "'");
    return it->second;
}

void VectorStore::insert(const std::string& id, Tensor vec) {
    if (dim_ == 0) dim_ = vec.size();
    if (vec.size() != dim_) {
        throw ShapeError("vector store: insert dim " + std::to_string(vec.size()) +
                         " into store of dim " + std::to_string(dim_));
    }
    vectors_[id] = std::move(vec);
}

}  // namespace memefuse
