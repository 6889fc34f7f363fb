#pragma once

#include "cbody/balances.hpp"
#include "cbody/solver.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace cbody {

/// Shortest round-trip decimal form of a double, locale independent.
std::string format_double(double v);
double parse_double(std::string_view text);

/// Nodal field dump: header x,y[,z],v1..vk, one row per node in node order.
void write_nodal_csv(const std::string& path, const ReferenceGrid& grid, const std::vector<VecN>& values);
std::vector<VecN> read_nodal_csv(const std::string& path, const ReferenceGrid& grid, int components);

void write_deformation(const std::string& path, const ReferenceGrid& grid, const DeformationField& u);
void write_descriptor(const std::string& path, const ReferenceGrid& grid, const MorphField& nu);
DeformationField read_deformation(const std::string& path, const ReferenceGrid& grid);
MorphField read_descriptor(const std::string& path, const ReferenceGrid& grid, int n);

/// iter,energy,grad_norm,step
void write_history_csv(const std::string& path, const std::vector<HistoryRow>& history);

/// Per Gauss point: cell,q,x..,energy,P..,S..,z..,beta..,b..
void write_actions_csv(const std::string& path, const ReferenceGrid& grid, const StateEvaluation& eval);

/// Per cell: cell,skew_residual,skew_relative
void write_cell_residuals_csv(const std::string& path, const SkewResidual& skew);

nlohmann::json to_json(const BalanceReport& rep);
nlohmann::json to_json(const ProbeReport& rep);
nlohmann::json to_json(const DiagnosticsReport& rep);

void write_json(const std::string& path, const nlohmann::json& doc);

} // namespace cbody
