# Test package for FlowToric
