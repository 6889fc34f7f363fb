#include "cbody/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace cbody {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    return out;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) return out;
        start = pos + 1;
    }
}

std::string position_header(int dim) {
    static const char* names[3] = {"x", "y", "z"};
    std::string h;
    for (int a = 0; a < dim; ++a) {
        if (a) h += ',';
        h += names[a];
    }
    return h;
}

template <class M>
void append_entries(std::string& row, const M& m) {
    for (int j = 0; j < m.cols(); ++j) {
        for (int i = 0; i < m.rows(); ++i) {
            row += ',';
            row += format_double(m(i, j));
        }
    }
}

} // namespace

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw Error("malformed number '" + std::string(text) + "'");
    }
    return v;
}

void write_nodal_csv(const std::string& path, const ReferenceGrid& grid, const std::vector<VecN>& values) {
    if (static_cast<long>(values.size()) != grid.node_count()) throw DimensionMismatch("field does not match grid");
    const int k = values.empty() ? 0 : static_cast<int>(values.front().size());
    std::string text = position_header(grid.dim());
    for (int i = 1; i <= k; ++i) text += ",v" + std::to_string(i);
    text += '\n';
    for (long a = 0; a < grid.node_count(); ++a) {
        const VecD x = grid.node_position(a);
        for (int i = 0; i < grid.dim(); ++i) {
            if (i) text += ',';
            text += format_double(x[i]);
        }
        for (int i = 0; i < k; ++i) {
            text += ',';
            text += format_double(values[a][i]);
        }
        text += '\n';
    }
    open_out(path) << text;
}

std::vector<VecN> read_nodal_csv(const std::string& path, const ReferenceGrid& grid, int components) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read '" + path + "'");
    const int d = grid.dim();
    const std::size_t cols = static_cast<std::size_t>(d + components);
    std::string line;
    if (!std::getline(in, line)) throw DimensionMismatch(path + ": empty file");
    if (split(line).size() != cols) {
        throw DimensionMismatch(path + ": expected " + std::to_string(cols) + " columns in the header");
    }
    std::vector<VecN> out;
    out.reserve(grid.node_count());
    const double tol = 1e-9 * (1.0 + grid.extents().maxCoeff() + grid.origin().cwiseAbs().maxCoeff());
    long row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto fields = split(line);
        if (fields.size() != cols) {
            throw DimensionMismatch(path + ": row " + std::to_string(row + 1) + " has " +
                                    std::to_string(fields.size()) + " columns, expected " + std::to_string(cols));
        }
        if (row >= grid.node_count()) throw DimensionMismatch(path + ": more rows than grid nodes");
        const VecD x = grid.node_position(row);
        for (int i = 0; i < d; ++i) {
            if (std::abs(parse_double(fields[i]) - x[i]) > tol) {
                throw DimensionMismatch(path + ": row " + std::to_string(row + 1) + " is not at node position");
            }
        }
        VecN v(components);
        for (int i = 0; i < components; ++i) v[i] = parse_double(fields[d + i]);
        out.push_back(v);
        ++row;
    }
    if (row != grid.node_count()) {
        throw DimensionMismatch(path + ": " + std::to_string(row) + " rows, grid has " +
                                std::to_string(grid.node_count()) + " nodes");
    }
    return out;
}

void write_deformation(const std::string& path, const ReferenceGrid& grid, const DeformationField& u) {
    std::vector<VecN> v;
    v.reserve(u.values.size());
    for (const auto& x : u.values) v.emplace_back(x);
    write_nodal_csv(path, grid, v);
}

void write_descriptor(const std::string& path, const ReferenceGrid& grid, const MorphField& nu) {
    write_nodal_csv(path, grid, nu.values);
}

DeformationField read_deformation(const std::string& path, const ReferenceGrid& grid) {
    DeformationField u;
    for (const auto& v : read_nodal_csv(path, grid, grid.dim())) u.values.emplace_back(v);
    return u;
}

MorphField read_descriptor(const std::string& path, const ReferenceGrid& grid, int n) {
    MorphField nu;
    nu.values = read_nodal_csv(path, grid, n);
    return nu;
}

void write_history_csv(const std::string& path, const std::vector<HistoryRow>& history) {
    std::string text = "iter,energy,grad_norm,step\n";
    for (const auto& r : history) {
        text += std::to_string(r.iter) + ',' + format_double(r.energy) + ',' + format_double(r.grad_norm) + ',' +
                format_double(r.step) + '\n';
    }
    open_out(path) << text;
}

void write_actions_csv(const std::string& path, const ReferenceGrid& grid, const StateEvaluation& eval) {
    const int d = grid.dim();
    if (eval.records.empty()) throw Error("no evaluated state");
    const int n = static_cast<int>(eval.records.front().jet.nu.size());
    static const char* axes[3] = {"x", "y", "z"};
    std::string text = "cell,q";
    for (int a = 0; a < d; ++a) text += std::string(",") + axes[a];
    text += ",energy";
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i) text += ",P" + std::to_string(i + 1) + std::to_string(j + 1);
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < n; ++i) text += ",S" + std::to_string(i + 1) + std::to_string(j + 1);
    for (int i = 0; i < n; ++i) text += ",z" + std::to_string(i + 1);
    for (int i = 0; i < n; ++i) text += ",beta" + std::to_string(i + 1);
    for (int i = 0; i < d; ++i) text += ",b" + std::to_string(i + 1);
    text += '\n';
    for (long c = 0; c < grid.cell_count(); ++c) {
        for (int q = 0; q < eval.points_per_cell; ++q) {
            const QuadratureRecord& rec = eval.at(c, q);
            std::string row = std::to_string(c) + ',' + std::to_string(q);
            append_entries(row, rec.jet.x);
            row += ',' + format_double(rec.act.energy);
            append_entries(row, rec.act.P);
            append_entries(row, rec.act.S);
            append_entries(row, rec.act.z);
            append_entries(row, rec.act.beta);
            append_entries(row, rec.act.b);
            text += row + '\n';
        }
    }
    open_out(path) << text;
}

void write_cell_residuals_csv(const std::string& path, const SkewResidual& skew) {
    std::string text = "cell,skew_residual,skew_relative\n";
    for (std::size_t c = 0; c < skew.residual.size(); ++c) {
        text += std::to_string(c) + ',' + format_double(skew.residual[c]) + ',' + format_double(skew.relative[c]) + '\n';
    }
    open_out(path) << text;
}

namespace {

template <class V>
nlohmann::json array(const V& v) {
    nlohmann::json a = nlohmann::json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

} // namespace

nlohmann::json to_json(const BalanceReport& rep) {
    nlohmann::json j;
    j["passed"] = rep.passed();
    j["failing"] = rep.failing;
    j["force_residual"] = array(rep.force_residual);
    j["force_residual_norm"] = rep.force_residual_norm;
    j["torque_residual"] = array(rep.torque_residual);
    j["torque_residual_norm"] = rep.torque_residual_norm;
    j["local_force_residual_norm"] = rep.local_force_residual_norm;
    j["micro_residual_norm"] = rep.micro_residual_norm;
    j["skew_residual_norm"] = rep.skew_residual_norm;
    j["weak_el_residual"] = rep.weak_el_residual;
    j["weak_sub_residual"] = rep.weak_sub_residual;
    j["config_residual_norm"] = rep.config_residual_norm;
    j["config_identity_defect"] = rep.config_identity_defect;
    j["power_gap"] = rep.power_gap;
    j["observer_identity_defect"] = rep.observer_identity_defect;
    j["diagnostics"] = {{"cauchy_skew_norm", rep.cauchy_skew_norm},
                        {"self_action_gap", rep.self_action_gap},
                        {"micro_integral", array(rep.micro_integral_diagnostic)}};
    nlohmann::json parts = nlohmann::json::object();
    for (const auto& [name, p] : rep.parts) parts[name] = {{"force_norm", p.force_norm}, {"torque_norm", p.torque_norm}};
    j["parts"] = parts;
    j["tolerances"] = {{"tol_eq", rep.tolerances.tol_eq},
                       {"tol_skew", rep.tolerances.tol_skew},
                       {"tol_config", rep.tolerances.tol_config},
                       {"tol_identity", rep.tolerances.tol_identity}};
    return j;
}

nlohmann::json to_json(const ProbeReport& rep) {
    nlohmann::json j;
    j["passed"] = rep.passed();
    j["samples"] = rep.samples;
    j["consistency_violations"] = rep.consistency_violations;
    j["convexity_violations"] = rep.convexity_violations;
    j["growth_violations"] = rep.growth_violations;
    j["max_consistency_error"] = rep.max_consistency_error;
    j["growth"] = {{"C1", rep.growth.C1},
                   {"C0", rep.growth.C0},
                   {"w_min", rep.growth.w_min},
                   {"w_max", rep.growth.w_max},
                   {"coercive", rep.growth.coercive}};
    nlohmann::json w = nlohmann::json::array();
    for (const auto& x : rep.witnesses) {
        w.push_back({{"kind", x.kind}, {"sample", x.sample}, {"lhs", x.lhs}, {"rhs", x.rhs}, {"F", x.F},
                     {"grad", x.grad}, {"nu", x.nu}});
    }
    j["witnesses"] = w;
    return j;
}

nlohmann::json to_json(const DiagnosticsReport& rep) {
    return {{"min_det", rep.min_det},
            {"minors_Lr", rep.minors_Lr},
            {"grad_Ls", rep.grad_Ls},
            {"orientation_ok", rep.orientation_ok}};
}

void write_json(const std::string& path, const nlohmann::json& doc) { open_out(path) << doc.dump(2) << '\n'; }

} // namespace cbody
