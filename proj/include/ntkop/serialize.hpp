#pragma once

#include "ntkop/neural_op.hpp"
#include "ntkop/poisson.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>

namespace ntkop {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double x);

/// 16 hex digits of FNV-1a over the given text.
std::string fnv1a_hex(const std::string& text);

nlohmann::json dataset_to_json(const Dataset& data);
Dataset dataset_from_json(const nlohmann::json& j);
void save_dataset(const Dataset& data, const std::string& path);
Dataset load_dataset(const std::string& path);

nlohmann::json params_to_json(const Params& theta, double tau);
Params params_from_json(const nlohmann::json& j);
void save_params(const Params& theta, double tau, const std::string& path);
Params load_params(const std::string& path);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

} // namespace ntkop
