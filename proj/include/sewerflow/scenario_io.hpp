#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sewerflow/model.hpp"

namespace sewerflow {

class ScenarioError : public std::runtime_error {
public:
  enum class Kind { Parse, Validation, Coverage };

  ScenarioError(Kind kind, const std::string& what, std::vector<std::string> details = {})
      : std::runtime_error(what), kind_(kind), details_(std::move(details)) {}

  Kind kind() const { return kind_; }
  const std::vector<std::string>& details() const { return details_; }

private:
  Kind kind_;
  std::vector<std::string> details_;
};

/// Reads a scenario document and its influent CSV (paths relative to the
/// document). Resamples influent onto the delta grid and validates.
Scenario load_scenario(const std::filesystem::path& path);

/// Same as load_scenario for an in-memory document.
Scenario parse_scenario(const nlohmann::json& doc,
                        const std::filesystem::path& base_dir = {});

/// Parses without running validation or coverage checks.
Scenario parse_scenario_unchecked(const nlohmann::json& doc,
                                  const std::filesystem::path& base_dir = {});

/// Self-contained document (influent inline, rates per minute, delays in steps).
nlohmann::json serialize_scenario(const Scenario& scenario);

/// Influent CSV rows: t_min, inlet_id, flow, c_<species>... Species without a
/// column (the biomass) get zero concentration.
struct InfluentSample {
  double t_min = 0.0;
  std::string inlet;
  double flow = 0.0;
  std::vector<double> conc;  // one entry per scenario species
};

std::vector<InfluentSample> read_influent_csv(const std::filesystem::path& path,
                                              const std::vector<std::string>& species);

/// Linear interpolation of samples onto the delta grid, one series per inlet.
std::vector<InfluentSeries> resample_influent(const std::vector<InfluentSample>& samples,
                                              const NetworkModel& network, double delta,
                                              std::size_t species_count);

}  // namespace sewerflow
