#pragma once

// Contents of the data files shipped with the toolkit, baked in at build
// time so binaries work without an install step. data/ stays the source
// of truth; CMake regenerates embedded_data.cpp from it.
extern const char* const kDefaultStopwordsText;
extern const char* const kDefaultSynonymsText;
