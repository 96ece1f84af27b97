#include "proxci/dataset.hpp"

#include "proxci/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace proxci {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Precondition: return "precondition";
        case ErrorKind::InvalidSpec: return "invalid-spec";
        case ErrorKind::UnknownScenario: return "unknown-scenario";
        case ErrorKind::UnknownVariable: return "unknown-variable";
        case ErrorKind::NonFinite: return "non-finite";
        case ErrorKind::TooFewDistinctValues: return "too-few-distinct-values";
        case ErrorKind::EmptyBin: return "empty-bin";
        case ErrorKind::BinUnderflow: return "bin-underflow";
        case ErrorKind::DimensionMismatch: return "dimension-mismatch";
        case ErrorKind::SingularSystem: return "singular-system";
        case ErrorKind::DegenerateInput: return "degenerate-input";
        case ErrorKind::AssumptionViolation: return "assumption-violation";
        case ErrorKind::GridMismatch: return "grid-mismatch";
        case ErrorKind::Io: return "io";
        case ErrorKind::Parse: return "parse";
        case ErrorKind::Config: return "config";
        case ErrorKind::Usage: return "usage";
    }
    return "unknown";
}

char role_tag(Role role) {
    switch (role) {
        case Role::Treatment: return 'a';
        case Role::Outcome: return 'y';
        case Role::Covariate: return 'x';
        case Role::Latent: return 'u';
    }
    return '?';
}

Role role_from_tag(char tag) {
    switch (tag) {
        case 'a': return Role::Treatment;
        case 'y': return Role::Outcome;
        case 'x': return Role::Covariate;
        default: break;
    }
    fail(ErrorKind::Parse, std::string("unknown column role '") + tag + "' (expected a|y|x)");
}

std::string to_string(const VariableId& id) {
    return (id.is_treatment() ? "A_" : "Y_") + std::to_string(id.index + 1);
}

Dataset::Dataset(std::vector<Column> columns, Eigen::MatrixXd values)
    : columns_(std::move(columns)), values_(std::move(values)) {
    require(static_cast<Eigen::Index>(columns_.size()) == values_.cols(),
            ErrorKind::DimensionMismatch, "column header count does not match value matrix");
    require(values_.allFinite(), ErrorKind::NonFinite, "dataset contains NaN or infinite values");
    for (Eigen::Index c = 0; c < values_.cols(); ++c) {
        for (Eigen::Index d = 0; d < c; ++d) {
            require(columns_[c].name != columns_[d].name, ErrorKind::Parse,
                    "duplicate column name '" + columns_[c].name + "'");
        }
        if (columns_[c].role == Role::Treatment) treatment_cols_.push_back(c);
        if (columns_[c].role == Role::Outcome) outcome_cols_.push_back(c);
    }
}

Eigen::Index Dataset::index_of(const std::string& name) const {
    for (std::size_t c = 0; c < columns_.size(); ++c) {
        if (columns_[c].name == name) return static_cast<Eigen::Index>(c);
    }
    fail(ErrorKind::UnknownVariable, "no column named '" + name + "'");
}

bool Dataset::has_column(const std::string& name) const {
    for (const auto& col : columns_) {
        if (col.name == name) return true;
    }
    return false;
}

Eigen::Ref<const Eigen::VectorXd> Dataset::column(const std::string& name) const {
    return values_.col(index_of(name));
}

Eigen::Index Dataset::column_of(const VariableId& id) const {
    const auto& cols = id.is_treatment() ? treatment_cols_ : outcome_cols_;
    require(id.index >= 0 && id.index < static_cast<int>(cols.size()), ErrorKind::UnknownVariable,
            "variable " + to_string(id) + " is not in the dataset");
    return cols[static_cast<std::size_t>(id.index)];
}

VariableId Dataset::variable_named(const std::string& name) const {
    const Eigen::Index c = index_of(name);
    for (std::size_t k = 0; k < treatment_cols_.size(); ++k) {
        if (treatment_cols_[k] == c) return VariableId::treatment(static_cast<int>(k));
    }
    for (std::size_t k = 0; k < outcome_cols_.size(); ++k) {
        if (outcome_cols_[k] == c) return VariableId::outcome(static_cast<int>(k));
    }
    fail(ErrorKind::UnknownVariable, "column '" + name + "' is neither a treatment nor an outcome");
}

Eigen::MatrixXd Dataset::gather(const std::vector<VariableId>& ids) const {
    Eigen::MatrixXd out(rows(), static_cast<Eigen::Index>(ids.size()));
    for (std::size_t k = 0; k < ids.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = variable(ids[k]);
    return out;
}

Dataset Dataset::permuted_rows(const std::vector<Eigen::Index>& order) const {
    require(static_cast<Eigen::Index>(order.size()) == rows(), ErrorKind::DimensionMismatch,
            "row permutation has wrong length");
    Eigen::MatrixXd out(rows(), cols());
    for (Eigen::Index r = 0; r < rows(); ++r) out.row(r) = values_.row(order[static_cast<std::size_t>(r)]);
    return Dataset(columns_, std::move(out));
}

Dataset Dataset::without_latent() const {
    std::vector<Column> keep;
    std::vector<Eigen::Index> idx;
    for (std::size_t c = 0; c < columns_.size(); ++c) {
        if (columns_[c].role != Role::Latent) {
            keep.push_back(columns_[c]);
            idx.push_back(static_cast<Eigen::Index>(c));
        }
    }
    Eigen::MatrixXd out(rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = values_.col(idx[k]);
    return Dataset(std::move(keep), std::move(out));
}

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

void write_csv(std::ostream& out, const Dataset& data) {
    std::vector<Eigen::Index> idx;
    for (std::size_t c = 0; c < data.columns().size(); ++c) {
        if (data.columns()[c].role != Role::Latent) idx.push_back(static_cast<Eigen::Index>(c));
    }
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto& col = data.columns()[static_cast<std::size_t>(idx[k])];
        out << (k ? "," : "") << col.name << ':' << role_tag(col.role);
    }
    out << '\n';
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
        for (std::size_t k = 0; k < idx.size(); ++k) {
            out << (k ? "," : "") << format_double(data.values()(r, idx[k]));
        }
        out << '\n';
    }
}

void write_csv_file(const std::string& path, const Dataset& data) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot open '" + path + "' for writing");
    write_csv(out, data);
    require(static_cast<bool>(out), ErrorKind::Io, "write to '" + path + "' failed");
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string trim(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && (s[b] == ' ' || s[b] == '\t')) ++b;
    return s.substr(b);
}

}  // namespace

Dataset read_csv(std::istream& in) {
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::Parse, "empty CSV input");
    std::vector<Column> columns;
    for (const auto& raw : split_line(trim(line))) {
        const std::string field = trim(raw);
        const auto colon = field.rfind(':');
        require(colon != std::string::npos && colon + 2 == field.size() && colon > 0, ErrorKind::Parse,
                "header field '" + field + "' is not of the form name:a|y|x");
        columns.push_back({field.substr(0, colon), role_from_tag(field.back())});
    }
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        const auto fields = split_line(line);
        require(fields.size() == columns.size(), ErrorKind::Parse,
                "line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                    " fields, expected " + std::to_string(columns.size()));
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) {
            const std::string t = trim(f);
            char* end = nullptr;
            const double v = std::strtod(t.c_str(), &end);
            require(!t.empty() && end == t.c_str() + t.size(), ErrorKind::Parse,
                    "line " + std::to_string(line_no) + ": '" + t + "' is not a number");
            require(std::isfinite(v), ErrorKind::NonFinite,
                    "line " + std::to_string(line_no) + ": non-finite value");
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
    }
    return Dataset(std::move(columns), std::move(values));
}

Dataset read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::Io, "cannot open '" + path + "'");
    return read_csv(in);
}

}  // namespace proxci
