#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

namespace proxci {

enum class Role { Treatment, Outcome, Covariate, Latent };

char role_tag(Role role);
Role role_from_tag(char tag);

// A treatment or outcome referenced by its position among columns of that role.
struct VariableId {
    enum class Kind { Treatment, Outcome } kind = Kind::Treatment;
    int index = 0;

    static VariableId treatment(int i) { return {Kind::Treatment, i}; }
    static VariableId outcome(int j) { return {Kind::Outcome, j}; }

    bool is_treatment() const { return kind == Kind::Treatment; }
    bool is_outcome() const { return kind == Kind::Outcome; }

    friend bool operator==(const VariableId&, const VariableId&) = default;
    friend auto operator<=>(const VariableId&, const VariableId&) = default;
};

std::string to_string(const VariableId& id);

struct Column {
    std::string name;
    Role role;
};

// Column-oriented table of n samples. Immutable after construction; rejects
// NaN and infinities.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<Column> columns, Eigen::MatrixXd values);

    Eigen::Index rows() const { return values_.rows(); }
    Eigen::Index cols() const { return values_.cols(); }
    const std::vector<Column>& columns() const { return columns_; }
    const Eigen::MatrixXd& values() const { return values_; }

    Eigen::Ref<const Eigen::VectorXd> column(Eigen::Index c) const { return values_.col(c); }
    Eigen::Ref<const Eigen::VectorXd> column(const std::string& name) const;
    Eigen::Index index_of(const std::string& name) const;
    bool has_column(const std::string& name) const;

    int treatment_count() const { return static_cast<int>(treatment_cols_.size()); }
    int outcome_count() const { return static_cast<int>(outcome_cols_.size()); }

    Eigen::Index column_of(const VariableId& id) const;
    Eigen::Ref<const Eigen::VectorXd> variable(const VariableId& id) const {
        return values_.col(column_of(id));
    }
    const std::string& name_of(const VariableId& id) const { return columns_[column_of(id)].name; }
    VariableId variable_named(const std::string& name) const;

    // Stack the named variables as the columns of an n x k matrix.
    Eigen::MatrixXd gather(const std::vector<VariableId>& ids) const;

    Dataset permuted_rows(const std::vector<Eigen::Index>& order) const;
    Dataset without_latent() const;

private:
    std::vector<Column> columns_;
    Eigen::MatrixXd values_;
    std::vector<Eigen::Index> treatment_cols_;
    std::vector<Eigen::Index> outcome_cols_;
};

// CSV with a `name:role` header (role in a|y|x); values printed with 17
// significant digits so a write/read cycle is lossless. Latent columns are
// never written.
void write_csv(std::ostream& out, const Dataset& data);
void write_csv_file(const std::string& path, const Dataset& data);
Dataset read_csv(std::istream& in);
Dataset read_csv_file(const std::string& path);

std::string format_double(double value);

}  // namespace proxci
