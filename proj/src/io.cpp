#include "rpy/io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rpy::io {

std::string format_double(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return doc;
}

void write_json_file(const std::string& path, const json& value) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << value.dump(2) << '\n';
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    char c;
    while (in.get(c)) {
        hash ^= static_cast<unsigned char>(c);
        hash *= 0x100000001b3ULL;
    }
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(hash));
    return buffer;
}

namespace {
double number_at(const json& doc, const std::string& key, const std::string& where) {
    if (!doc.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
    if (!doc[key].is_number()) throw ParseError(where + ": field '" + key + "' must be a number");
    return doc[key].get<double>();
}
} // namespace

json vector_to_json(const Vector& v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

Vector vector_from_json(const json& doc) {
    if (!doc.is_array()) throw ParseError("expected a numeric array");
    Vector v(static_cast<Index>(doc.size()));
    Index i = 0;
    for (const auto& entry : doc) {
        if (!entry.is_number()) throw ParseError("expected a numeric array entry");
        v[i++] = entry.get<double>();
    }
    return v;
}

json matrix_to_json(const Matrix& m) {
    json out = json::array();
    for (Index i = 0; i < m.rows(); ++i) out.push_back(vector_to_json(m.row(i).transpose()));
    return out;
}

Matrix matrix_from_json(const json& doc) {
    if (!doc.is_array() || doc.empty()) throw ParseError("expected a nonempty nested array");
    const Index rows = static_cast<Index>(doc.size());
    Vector first = vector_from_json(doc[0]);
    Matrix m(rows, first.size());
    m.row(0) = first.transpose();
    for (Index i = 1; i < rows; ++i) {
        Vector row = vector_from_json(doc[static_cast<std::size_t>(i)]);
        if (row.size() != m.cols()) throw ParseError("ragged nested array");
        m.row(i) = row.transpose();
    }
    return m;
}

void reject_unknown_keys(const json& doc, const std::vector<std::string>& allowed,
                         const std::string& where) {
    for (const auto& item : doc.items()) {
        bool known = false;
        for (const auto& key : allowed)
            if (item.key() == key) {
                known = true;
                break;
            }
        if (!known) throw ValidationError(where + ": unknown field '" + item.key() + "'");
    }
}

Mdp mdp_from_json(const json& doc) {
    reject_unknown_keys(doc, {"num_states", "num_actions", "gamma", "mu", "transition", "reward"},
                        "mdp");
    const Index m = static_cast<Index>(number_at(doc, "num_states", "mdp"));
    const Index n = static_cast<Index>(number_at(doc, "num_actions", "mdp"));
    const double gamma = number_at(doc, "gamma", "mdp");
    if (!doc.contains("mu") || !doc.contains("transition") || !doc.contains("reward"))
        throw ParseError("mdp: missing mu/transition/reward");

    const Vector mu = vector_from_json(doc["mu"]);
    if (mu.size() != m) throw ValidationError("mdp: mu must have num_states entries");

    const json& t = doc["transition"];
    if (!t.is_array() || static_cast<Index>(t.size()) != m)
        throw ValidationError("mdp: transition must have num_states blocks");
    std::vector<Matrix> transition;
    transition.reserve(static_cast<std::size_t>(m));
    for (const auto& block : t) {
        Matrix b = matrix_from_json(block);
        if (b.rows() != n || b.cols() != m)
            throw ValidationError("mdp: each transition block must be num_actions x num_states");
        transition.push_back(std::move(b));
    }

    Matrix reward = matrix_from_json(doc["reward"]);
    if (reward.rows() != m || reward.cols() != n)
        throw ValidationError("mdp: reward must be num_states x num_actions");

    return Mdp(gamma, mu, std::move(transition), std::move(reward));
}

json mdp_to_json(const Mdp& mdp) {
    json doc;
    doc["num_states"] = mdp.num_states;
    doc["num_actions"] = mdp.num_actions;
    doc["gamma"] = mdp.gamma;
    doc["mu"] = vector_to_json(mdp.mu);
    json t = json::array();
    for (const Matrix& block : mdp.transition) t.push_back(matrix_to_json(block));
    doc["transition"] = std::move(t);
    doc["reward"] = matrix_to_json(mdp.reward);
    return doc;
}

Mdp load_mdp(const std::string& path) { return mdp_from_json(load_json_file(path)); }

GroupPair pair_from_json(const json& doc) {
    reject_unknown_keys(doc, {"mdp0", "mdp1", "lambda"}, "pair");
    if (!doc.contains("mdp0") || !doc.contains("mdp1"))
        throw ParseError("pair: missing mdp0/mdp1");
    const double lambda = doc.contains("lambda") ? number_at(doc, "lambda", "pair") : 0.5;
    return GroupPair(mdp_from_json(doc["mdp0"]), mdp_from_json(doc["mdp1"]), lambda);
}

json pair_to_json(const GroupPair& pair) {
    json doc;
    doc["mdp0"] = mdp_to_json(pair.mdp0);
    doc["mdp1"] = mdp_to_json(pair.mdp1);
    doc["lambda"] = pair.lambda;
    return doc;
}

GroupPair load_pair(const std::string& path) { return pair_from_json(load_json_file(path)); }

void save_pair(const GroupPair& pair, const std::string& path) {
    write_json_file(path, pair_to_json(pair));
}

Policy load_policy(const std::string& path) {
    return Policy(matrix_from_json(load_json_file(path)));
}

void save_policy(const Policy& policy, const std::string& path) {
    write_json_file(path, matrix_to_json(policy.pi));
}

Matrix load_feature_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ParseError(path + ": non-numeric cell '" + cell + "'");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError(path + ": ragged csv row");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(path + ": empty csv");
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j)
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

CsvTable load_csv_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    CsvTable table;
    std::string line;
    if (!std::getline(in, line) || line.empty()) throw ParseError(path + ": missing header");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) table.columns.push_back(cell);
    }
    std::vector<std::vector<double>> body;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ParseError(path + ": non-numeric cell '" + cell + "'");
            }
        }
        if (row.size() != table.columns.size()) throw ParseError(path + ": ragged csv row");
        body.push_back(std::move(row));
    }
    table.rows = Matrix(static_cast<Index>(body.size()), static_cast<Index>(table.columns.size()));
    for (Index i = 0; i < table.rows.rows(); ++i)
        for (Index j = 0; j < table.rows.cols(); ++j)
            table.rows(i, j) = body[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return table;
}

void save_feature_csv(const std::string& path, const Matrix& features) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    for (Index i = 0; i < features.rows(); ++i) {
        for (Index j = 0; j < features.cols(); ++j) {
            if (j) out << ',';
            out << format_double(features(i, j));
        }
        out << '\n';
    }
}

} // namespace rpy::io
