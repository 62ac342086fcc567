# Tests package for the booking services API
