#pragma once

#include "rpy/mdp.hpp"
#include "rpy/types.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace rpy::io {

using nlohmann::json;

/// Strict double formatting used in every CSV ("%.17g", round-trip safe).
std::string format_double(double value);

json load_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& value);

/// FNV-1a 64-bit content hash of a file, as a hex string.
std::string file_digest(const std::string& path);

// MDP document: num_states, num_actions, gamma, mu, transition, reward.
Mdp mdp_from_json(const json& doc);
json mdp_to_json(const Mdp& mdp);
Mdp load_mdp(const std::string& path);

// Pair document: { "mdp0": {...}, "mdp1": {...}, "lambda": 0.5 }.
GroupPair pair_from_json(const json& doc);
json pair_to_json(const GroupPair& pair);
GroupPair load_pair(const std::string& path);
void save_pair(const GroupPair& pair, const std::string& path);

// Policy document: bare row-stochastic matrix as nested arrays.
Policy load_policy(const std::string& path);
void save_policy(const Policy& policy, const std::string& path);

json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const json& doc);
json vector_to_json(const Vector& v);
Vector vector_from_json(const json& doc);

/// Feature batch CSV: one row per sample, plain numeric columns.
Matrix load_feature_csv(const std::string& path);
void save_feature_csv(const std::string& path, const Matrix& features);

/// Headed CSV (run logs, aggregates): column names plus a numeric body.
struct CsvTable {
    std::vector<std::string> columns;
    Matrix rows;
};
CsvTable load_csv_table(const std::string& path);

/// Throws ValidationError when `doc` contains a key outside `allowed`.
void reject_unknown_keys(const json& doc, const std::vector<std::string>& allowed,
                         const std::string& where);

} // namespace rpy::io
