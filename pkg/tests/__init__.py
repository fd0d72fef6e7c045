# Test suite for oikf
