#pragma once

#include <iosfwd>
#include <string>

#include "gma/multi_level.hpp"

namespace gma {

/// Reads a dataset CSV with header columns subject_id, t, z, m, r (any column
/// order). Per subject, t must be a contiguous ascending sequence starting at
/// 1 and every numeric cell must be finite; violations are reported with the
/// offending line number. Subjects keep their order of first appearance.
MultiSubjectDataset read_dataset(const std::string& path);
MultiSubjectDataset read_dataset_stream(std::istream& in, const std::string& name);

/// Writes the same layout: UTF-8, '.' decimal separator, comma delimiter,
/// LF line endings.
void write_dataset(const MultiSubjectDataset& data, const std::string& path);
void write_dataset_stream(const MultiSubjectDataset& data, std::ostream& out);

/// Subtracts each subject's per-channel mean; used by the --demean CLI flag
/// since the structural model carries no intercepts.
void demean_subjects(MultiSubjectDataset& data);

}  // namespace gma
