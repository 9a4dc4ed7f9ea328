#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "otest/adversary.hpp"
#include "otest/harness.hpp"
#include "otest/hypothesis.hpp"
#include "otest/optimizer.hpp"
#include "otest/testers.hpp"

// JSON and CSV file formats. Every loader validates on the way in and throws
// otest::Error with a validation kind on bad input.
namespace otest::io {

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

// {"classes":[{"p":..,"count":..}, ...]}
HypothesisModel parse_hypothesis(std::string_view text);
HypothesisModel load_hypothesis(const std::filesystem::path& path);
std::string hypothesis_json(const HypothesisModel& p);

// {"classes":[{"y":..,"probs":[..]}, ...]}
AlternativeModel parse_alternative(std::string_view text);
AlternativeModel load_alternative(const std::filesystem::path& path);
std::string alternative_json(const AlternativeModel& q);

OptimalTesterModel parse_model(std::string_view text);
OptimalTesterModel load_model(const std::filesystem::path& path);
std::string model_json(const OptimalTesterModel& model);
// Sidecar path for a model file: model.json -> model.verify.json.
std::filesystem::path verify_sidecar_path(const std::filesystem::path& model_path);
std::string stationarity_json(const StationarityReport& report);
std::string verify_json(const VerifyReport& report);

std::string tester_json(const SemilinearTester& tester);
SemilinearTester parse_tester(std::string_view text);

std::string adversary_json(const AdversaryModel& adv);

// Paths inside the config resolve against the config file's directory.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

std::string csv_header();
std::string csv_row(const ResultRow& row);
std::string rows_csv(const std::vector<ResultRow>& rows);
std::string rows_json(const std::vector<ResultRow>& rows);

}  // namespace otest::io
