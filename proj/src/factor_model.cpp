#include "rankarb/factor_model.hpp"

#include <fstream>

#include <json.hpp>

namespace rankarb {

namespace {

using nlohmann::json;

json matrix_to_json(const MatrixXd& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

MatrixXd matrix_from_json(const json& j, Index rows, Index cols, const char* what) {
    if (!j.is_array() || static_cast<Index>(j.size()) != rows) {
        throw DataError(std::string("factor model: '") + what + "' has the wrong row count");
    }
    MatrixXd m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
            throw DataError(std::string("factor model: '") + what + "' row " + std::to_string(i) +
                            " has the wrong length");
        }
        for (Index k = 0; k < cols; ++k) {
            m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
        }
    }
    return m;
}

}  // namespace

std::string to_json(const FactorModel<double>& model) {
    json j;
    j["as_of"] = model.as_of.str();
    j["K"] = model.K;
    j["universe"] = model.universe;
    j["factor_weights"] = matrix_to_json(model.factor_weights);
    j["loadings"] = matrix_to_json(model.loadings);
    j["projector"] = matrix_to_json(model.projector);
    return j.dump();
}

FactorModel<double> factor_model_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("factor model: ") + e.what());
    }
    try {
        FactorModel<double> model;
        model.as_of = Date::parse(j.at("as_of").get<std::string>());
        model.K = j.at("K").get<Index>();
        model.universe = j.at("universe").get<std::vector<std::string>>();
        const auto N = static_cast<Index>(model.universe.size());
        model.factor_weights = matrix_from_json(j.at("factor_weights"), model.K, N, "factor_weights");
        model.loadings = matrix_from_json(j.at("loadings"), N, model.K, "loadings");
        model.projector = matrix_from_json(j.at("projector"), N, N, "projector");
        return model;
    } catch (const json::exception& e) {
        throw DataError(std::string("factor model: ") + e.what());
    }
}

void write_factor_model(const FactorModel<double>& model, const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    out << to_json(model) << '\n';
}

}  // namespace rankarb
