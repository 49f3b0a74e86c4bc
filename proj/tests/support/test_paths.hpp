#pragma once

#include <filesystem>

#ifndef ICDST_TEST_DATA_DIR
#error "ICDST_TEST_DATA_DIR must be defined"
#endif

namespace icdst::testing {

inline std::filesystem::path data_dir() { return ICDST_TEST_DATA_DIR; }
inline std::filesystem::path fixture(const char* name) { return data_dir() / "fixtures" / name; }
inline std::filesystem::path multiwoz_ontology_path() { return data_dir() / "multiwoz" / "ontology.json"; }

}  // namespace icdst::testing
