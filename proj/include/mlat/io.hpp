#pragma once

#include "mlat/lattice.hpp"
#include "mlat/potential.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace mlat {

using json = nlohmann::json;

/// A crystal document resolved into geometry, validated range, potential and defect.
struct Crystal {
    std::string name;
    Multilattice spec;
    RangeValidation range;
    PotentialPtr pot;
    DefectModel defect;
    bool allow_unstable = false;
    bool calibrated = false;          // shifts were replaced by the equilibrated ones
    double calibration_residual = 0.0;
    json source;
};

/// {"d", "n", "F", "shifts", "triplets", "potential", "defect"}; see README for the schema.
Crystal load_crystal(const json& doc);
Crystal load_crystal_file(const std::string& path);

std::vector<std::string> preset_names();
json preset_document(const std::string& name);
Crystal preset(const std::string& name);

/// An existing file path, or else a preset name (optionally with a .json suffix, no directory).
Crystal resolve_crystal(const std::string& arg);

/// Binary field container: magic "MLDF", u32 version, u32 d, u32 n, u32 S, f64 radius, u64 sites,
/// F (d x d row-major f64), site coordinates (sites x d i32), values (f64, site-major then species).
/// All little endian.
void write_field_binary(const std::string& path, const DisplacementField& u);

struct LoadedField {
    Multilattice spec;  // F only; shifts are not stored
    DisplacementField u;
};

/// Reads a field back onto a window over the stored sites (range: mesh edges only).
LoadedField read_field_binary(const std::string& path);

/// Columns: site coordinates, position, then species/component values.
void write_field_csv(const std::string& path, const DisplacementField& u);

}  // namespace mlat
