#pragma once

#include <filesystem>
#include <string>

#include "eiknet/grid.hpp"

namespace eiknet {

/// CSV layout: one header line
///   `# dims=NX,NY[,NZ] h=H origin=X,Y[,Z]`
/// then one line per lattice row (x fastest), rows ordered by y then z.
/// Non-finite values are written as `inf`. An optional extra comment line
/// (provenance) may follow the header.
std::string field_to_csv(const GridField& field, const std::string& provenance = {});
GridField field_from_csv(const std::string& text);

/// 16-bit binary PGM, top row = largest y, z slices stacked top to bottom.
/// Finite values map affinely onto [0, 65534]; non-finite cells are 65535.
/// The sidecar records the mapping as key = value lines.
struct PgmExport {
  std::string pgm;
  std::string sidecar;
};
PgmExport field_to_pgm16(const GridField& field);

/// Write-temp-then-rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& data);

}  // namespace eiknet
