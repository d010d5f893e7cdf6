#pragma once

#include "eegasym/core.hpp"
#include "eegasym/distributions.hpp"
#include "eegasym/dsp.hpp"
#include "eegasym/features.hpp"
#include "eegasym/ingest.hpp"
#include "eegasym/pipeline.hpp"
#include "eegasym/stats.hpp"
#include "eegasym/stream.hpp"
#include "eegasym/synth.hpp"
#include "eegasym/teq.hpp"
