#ifndef PLANPROBE_PLANPROBE_HPP
#define PLANPROBE_PLANPROBE_HPP

#include "planprobe/activation_store.hpp"
#include "planprobe/config.hpp"
#include "planprobe/dataset_builder.hpp"
#include "planprobe/error.hpp"
#include "planprobe/labeling.hpp"
#include "planprobe/metrics.hpp"
#include "planprobe/oracle.hpp"
#include "planprobe/probe.hpp"
#include "planprobe/report.hpp"
#include "planprobe/rng.hpp"
#include "planprobe/sha256.hpp"
#include "planprobe/sweep.hpp"
#include "planprobe/synth.hpp"
#include "planprobe/version.hpp"

#endif  // PLANPROBE_PLANPROBE_HPP
