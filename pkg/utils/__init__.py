# LOFT v1.0 - Utilities Package
