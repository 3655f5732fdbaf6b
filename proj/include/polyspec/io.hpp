#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "polyspec/fitting.hpp"
#include "polyspec/liouville.hpp"
#include "polyspec/spectrum.hpp"
#include "polyspec/trajectory.hpp"

// File formats. All parse errors surface as ConfigError.
namespace polyspec::io {

using json = nlohmann::json;

// Model document: either {"preset": name, "params": {...}} or the explicit form
// {dimension, labels, hamiltonian, channels: [{op, rate_khz, label}], measurement_op, beta_sq_khz}
// with matrices as row-major lists of [re, im] pairs.
json spec_to_json(const LiouvillianSpec& spec);
LiouvillianSpec spec_from_json(const json& doc);
LiouvillianSpec load_model(const std::filesystem::path& path);

// Trace: little-endian f64 samples at `path`, sidecar {dt_ms, n_samples, units, seed, model_hash}
// next to it with extension .json, optional latent record with extension .latent.bin.
void write_trace(const TimeTrace& trace, const std::filesystem::path& path);
TimeTrace read_trace(const std::filesystem::path& path);
std::filesystem::path trace_sidecar(const std::filesystem::path& path);

json spectrum_to_json(const SpectrumGrid& grid);
SpectrumGrid spectrum_from_json(const json& doc);
// Writes the JSON document and a CSV table with the same stem.
void write_spectrum(const SpectrumGrid& grid, const std::filesystem::path& path);
SpectrumGrid read_spectrum(const std::filesystem::path& path);
std::string spectrum_csv(const SpectrumGrid& grid);

// Fit config: spectra paths are resolved relative to `base_dir`.
FitProblem fit_problem_from_json(const json& doc, const std::filesystem::path& base_dir);
json fit_result_to_json(const FitResult& result);
FitResult fit_result_from_json(const json& doc);

json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace polyspec::io
