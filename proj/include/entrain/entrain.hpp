#pragma once

#include "entrain/corpus.hpp"
#include "entrain/corpus_io.hpp"
#include "entrain/entrainment.hpp"
#include "entrain/error.hpp"
#include "entrain/geometry.hpp"
#include "entrain/report.hpp"
#include "entrain/rng.hpp"
#include "entrain/stats.hpp"
#include "entrain/synth.hpp"
