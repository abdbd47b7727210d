#pragma once

// Versioned prompt-format constants. The offline mock recognizes prompts by
// these exact strings, so changing any of them is a format break: bump the
// version suffix and expect replay caches keyed on old prompts to miss.
namespace molalign::prompting {

inline constexpr const char *kStage1Marker = "<<MD-TEMPLATE-REQUEST v1>>";
inline constexpr const char *kStage2Marker = "<<MD-TEXT-REQUEST v1>>";

// section headings inside the stage-2 prompt body
inline constexpr const char *kPropertiesHeading = "Properties to cover:";
inline constexpr const char *kCalibratedHeading = "Calibrated knowledge:";
inline constexpr const char *kSmilesPrefix = "SMILES: ";

} // namespace molalign::prompting
