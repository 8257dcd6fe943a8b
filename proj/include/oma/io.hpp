#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "oma/beam_model.hpp"
#include "oma/compare.hpp"
#include "oma/identify.hpp"
#include "oma/simulator.hpp"

namespace oma {

/// File formats. Node indices are 1-based on disk (matching the experiment's
/// node numbering); all in-memory indices stay 0-based.

/// `# fs=<Hz> kind=<force|acceleration> nodes=<comma list> seed=<u64>`
/// followed by one comma-separated row per sample, full double precision.
void write_time_history_csv(const std::filesystem::path& path, const TimeHistory& th);
TimeHistory read_time_history_csv(const std::filesystem::path& path);

std::string beam_spec_to_json(const BeamSpec& spec);
BeamSpec beam_spec_from_json(const std::string& text);

/// Header row carries the modal frequencies; one row per node.
void write_modal_set_csv(const std::filesystem::path& path, const ModalSet& set);

std::string identified_to_json(const IdentifiedModeSet& set);
IdentifiedModeSet identified_from_json(const std::string& text);
void write_identified_json(const std::filesystem::path& path, const IdentifiedModeSet& set);
IdentifiedModeSet read_identified_json(const std::filesystem::path& path);

/// Rows = modes, columns = nodes (Tables 1-4 layout).
void write_identified_shapes_csv(const std::filesystem::path& path, const IdentifiedModeSet& set);

void write_curves_csv(const std::filesystem::path& path, const DiagnosticCurves& curves);

void write_mac_csv(const std::filesystem::path& path, const MacMatrix& m);

/// Frequency column plus the row-major flattened complex matrix
/// (re_ij, im_ij per pair) — the plotting export for the spectra.
void write_cross_spectral_csv(const std::filesystem::path& path, const CrossSpectralMatrix& g);

/// Frequency column plus ANPSD and the per-channel NPSD columns.
void write_anpsd_csv(const std::filesystem::path& path, const Anpsd& a);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace oma
