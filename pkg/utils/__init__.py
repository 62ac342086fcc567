# Utils package for helper functions and data generation
