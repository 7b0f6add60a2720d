#pragma once

#include "hdgns/types.hpp"
#include "hdgns/mesh.hpp"
#include "hdgns/quadrature.hpp"
#include "hdgns/basis.hpp"
#include "hdgns/spaces.hpp"
#include "hdgns/state.hpp"
#include "hdgns/forms.hpp"
#include "hdgns/norms.hpp"
#include "hdgns/solver.hpp"
#include "hdgns/manufactured.hpp"
#include "hdgns/analysis.hpp"
#include "hdgns/vtk.hpp"
#include "hdgns/config.hpp"
#include "hdgns/driver.hpp"
