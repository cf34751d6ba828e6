# Test package for hrom
