#pragma once

#include "egad/adam.hpp"
#include "egad/attention.hpp"
#include "egad/config.hpp"
#include "egad/distill.hpp"
#include "egad/errors.hpp"
#include "egad/event_sim.hpp"
#include "egad/gcn.hpp"
#include "egad/graph.hpp"
#include "egad/io.hpp"
#include "egad/linkpred.hpp"
#include "egad/matrix.hpp"
#include "egad/parallel.hpp"
#include "egad/record.hpp"
#include "egad/teacher.hpp"
