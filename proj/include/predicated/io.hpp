#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>

#include "predicated/attention.hpp"
#include "predicated/autodiff.hpp"
#include "predicated/guidance.hpp"

namespace predicated {

inline constexpr std::string_view kArtifactVersion = "1.0.0";

// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);
// Fixed nine decimals, as used for CLI key-value output.
std::string format_fixed9(double v);

/// AMAP text format:
///
///     AMAP 1
///     tokens K
///     size W H
///     token <label>      (K blocks, the first labelled <sot>)
///     H lines of W space-separated intensities
///
/// Throws FormatError on malformed input.
AttentionStack read_amap(std::istream& in);
AttentionStack read_amap_file(const std::string& path);
void write_amap(std::ostream& out, const AttentionStack& stack);
void write_amap_file(const std::string& path, const AttentionStack& stack);

// Same layout with header "GRAD 1"; entries are unbounded reals.
void write_gradient(std::ostream& out, const GradientField& field);

// step,loss,degree,conjunct_0,...
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

// P2 greyscale, maxval 255, round(255 * A).
void write_pgm(std::ostream& out, const AttentionStack& stack, std::size_t token);

/// Everything needed to rerun `simulate` bit-identically.
struct RunManifest {
    std::string version = std::string(kArtifactVersion);
    std::string dsl;
    std::vector<std::string> tokens;  // channel labels, <sot> first
    TokenBinding binding;
    std::size_t width = 16;
    std::size_t height = 16;
    GuidanceConfig config;
};

// Flat key=value lines.
void write_manifest(std::ostream& out, const RunManifest& manifest);
RunManifest read_manifest(std::istream& in);

/// Compiles manifest.dsl against manifest.binding and runs the simulator.
Trajectory simulate(const RunManifest& manifest);

/// Writes trajectory.csv, initial.amap, final.amap, manifest.txt and one
/// final_<k>.pgm per channel into `dir` (created if missing).
void write_run(const std::string& dir, const RunManifest& manifest, const Trajectory& trajectory);

// key=value lines, '#' comments and blank lines skipped.
std::map<std::string, std::string> read_key_values(std::istream& in);

}  // namespace predicated
