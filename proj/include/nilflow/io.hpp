#pragma once

// Machine-readable reports: ordered JSON (byte-identical across serial runs)
// and plot-ready CSV grid dumps.

#include <json.hpp>

#include <string>

#include "nilflow/flow.hpp"
#include "nilflow/lie.hpp"
#include "nilflow/numlin.hpp"

namespace nilflow::io {

using json = nlohmann::ordered_json;

// Rationals as [numerator, denominator]; wide values fall back to strings.
json rat_to_json(const Rat& q);
json ratmat_to_json(const RatMat& m);
json cmat_to_json(const CMat& m);  // rows of [re, im] pairs

// Every report embeds this so consumers cannot misread the exponents.
json conventions_block();

json grading_to_json(const lie::CommutingGrading& g);

std::string dump_json(const json& j);  // 2-space indent, trailing newline

// One row per node: ix, iy, x, y, then r^2 entries of H interleaved (re, im),
// row-major.
void write_field_csv(const std::string& path, const flow::EquivariantField& f);
void write_scalar_csv(const std::string& path, const flow::ScalarField& f);

void write_text_file(const std::string& path, const std::string& content);

// {"r": int, "k": int, "generators": [[[int]]]}
std::vector<RatMat> parse_generators_json(const std::string& text);

}  // namespace nilflow::io
