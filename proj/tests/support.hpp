#pragma once

// Shared fixtures: the published input tables and small helpers.

#include <string>

#include "idmfit/data_model.hpp"
#include "idmfit/lifetable.hpp"

namespace idmfit::test {

inline std::string data_path(const std::string& name) {
    return std::string(IDMFIT_DATA_DIR) + "/" + name;
}

inline CurrentStatusTable coal_miners() {
    return read_current_status_csv(data_path("coal_miners_breathlessness.csv"));
}

inline LifeTable england_wales() { return read_lifetable_csv(data_path("lifetable_england_wales.csv")); }

inline CurrentStatusTable diabetes(int year) {
    return read_current_status_csv(data_path("diabetes_women_" + std::to_string(year) + ".csv"));
}

} // namespace idmfit::test
