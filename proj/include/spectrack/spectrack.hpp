#pragma once

#include "spectrack/cli.hpp"
#include "spectrack/embed.hpp"
#include "spectrack/errors.hpp"
#include "spectrack/fft.hpp"
#include "spectrack/format.hpp"
#include "spectrack/geometry.hpp"
#include "spectrack/ingest.hpp"
#include "spectrack/preprocess.hpp"
#include "spectrack/render.hpp"
#include "spectrack/rng.hpp"
#include "spectrack/rtdt.hpp"
#include "spectrack/similarity.hpp"
#include "spectrack/time.hpp"
